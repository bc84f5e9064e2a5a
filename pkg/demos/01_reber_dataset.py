"""Generate Reber-grammar strings and build a labeled dataset.

The grammar walks a fixed transition diagram from a start state to an
accept state; a string is valid exactly when some walk produces it.
Invalid strings are made by corrupting valid ones until validation
fails, so the two classes share surface statistics.
"""

from sparse_rnn.numerics import Rng
from sparse_rnn.reber import (build_dataset, generate_false, generate_true,
                              length_histogram, validate)

rng = Rng(0)

print("five valid strings:")
for _ in range(5):
    text = generate_true(rng)
    print(f"  {text}  valid={validate(text)}")

print("five invalid strings:")
for _ in range(5):
    text = generate_false(rng)
    print(f"  {text}  valid={validate(text)}")

dataset = build_dataset(2000, Rng(1))
print(f"\ndataset: {len(dataset.train)} train / {len(dataset.test)} test")
print(f"train class counts: {dataset.class_counts('train')}")
print(f"test class counts:  {dataset.class_counts('test')}")

histogram = length_histogram(dataset.train)
print("\ntrain length histogram:")
for length in sorted(histogram):
    print(f"  {length:3d}  {'#' * (histogram[length] // 10)}")
