"""Correlate graph properties with accuracy over a small corpus.

Trains twenty small graph-wired GRU models (ten Watts-Strogatz, ten
Barabasi-Albert), collects one record of 23 graph properties plus test
accuracy per run, then reports Pearson correlations and regression fits
over feature subsets.  Takes a minute or two on one core.
"""

from sparse_rnn.analysis import (correlation_report, importance_circumstances,
                                 minmax_scale, table_from_records)
from sparse_rnn.numerics import Rng
from sparse_rnn.randstruct import RunSettings, run_random_experiments
from sparse_rnn.reber import build_dataset

dataset = build_dataset(2000, Rng(0))
records = run_random_experiments(
    10, "gru", dataset, Rng(0),
    settings=RunSettings(epochs=2, batch_size=64, node_range=(8, 20)),
    log=lambda s: print("  " + s))

table = minmax_scale(table_from_records(records))
report = correlation_report(table)

print("\nstrongest property-accuracy correlations:")
ranked = sorted(report.items(), key=lambda kv: -abs(kv[1]))
for name, r in ranked[:6]:
    print(f"  {name:28s} {r:+.3f}")

print("\nregression fits per feature subset:")
circumstances = importance_circumstances(table, Rng(1))
for subset, result in circumstances.items():
    r2 = result["r_squared"]
    print(f"  {subset:15s} ridge R^2 {r2['ridge']:+.3f}   "
          f"forest R^2 {r2['random_forest']:+.3f}")

best = circumstances["all"]["importances"]
print("\ntop forest importances (all features):")
for name, value in sorted(best.items(), key=lambda kv: -kv[1])[:5]:
    print(f"  {name:28s} {value:.3f}")
