"""Magnitude pruning with retraining, swept from 10% to 100%.

For each percent the sweep clones the trained model, zeroes the weights
whose magnitude falls below that percentile, measures the damage, and
retrains under the mask until the model regains its pre-prune accuracy
(minus a one-point margin) or the epoch budget runs out.
"""

from sparse_rnn.model import RecurrentModel
from sparse_rnn.numerics import Rng
from sparse_rnn.pruning import PruneTarget, prune_sweep
from sparse_rnn.reber import build_dataset

dataset = build_dataset(4000, Rng(0))
model = RecurrentModel("gru", n_layers=2, hidden_size=24, d_emb=24,
                       rng=Rng(1))
model.train(dataset, epochs=5, batch_size=64, lr=1e-3, rng=Rng(2),
            target_accuracy=0.95)
print(f"base accuracy: {model.evaluate(dataset.test):.4f}\n")

rows = prune_sweep(model, dataset, Rng(3), target=PruneTarget.BOTH,
                   max_epochs=3, batch_size=64)

print("percent  zero-frac  acc-after-prune  epochs-to-regain")
for row in rows:
    print(f"{row.percent:7.0f}  {row.zero_fraction:9.4f}  "
          f"{row.acc_after:15.4f}  {row.epochs_to_regain:16d}")
