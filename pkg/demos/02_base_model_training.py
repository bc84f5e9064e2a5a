"""Train a small GRU classifier on the Reber dataset from scratch.

The model embeds each symbol, runs two recurrent layers, reads the last
hidden state, and trains with Adam on cross-entropy.  Everything is
seeded, so rerunning this script reproduces the same numbers.
"""

from sparse_rnn.model import RecurrentModel
from sparse_rnn.numerics import Rng
from sparse_rnn.reber import build_dataset

dataset = build_dataset(4000, Rng(0))
model = RecurrentModel("gru", n_layers=2, hidden_size=24, d_emb=24,
                       rng=Rng(1))
print(f"gru model with {model.n_params()} parameters")

history = model.train(dataset, epochs=5, batch_size=64, lr=1e-3,
                      rng=Rng(2), target_accuracy=0.97,
                      log=lambda s: print("  " + s))

last = history[-1]
print(f"\nstopped after epoch {last['epoch']}: "
      f"train loss {last['train_loss']:.4f}, "
      f"test accuracy {last['test_accuracy']:.4f}")

from sparse_rnn.reber import validate  # noqa: E402  (demo narrative order)

texts = ["BTSSXXTTVVE", "BPTTVPSE", "BTSSXXTTVVS", "BPTTVPSX"]
for text, label in zip(texts, model.predict(texts)):
    print(f"  {text}: predicted {label}, actually valid={validate(text)}")
