"""Magnitude pruning of recurrent weights with retrain-to-regain.

A prune target picks weight roles inside the recurrent layers:
input-to-hidden (U, or the input-column block of each gate matrix),
hidden-to-hidden (W, or the h-column block), or both.  Embedding, head
and biases are never pruned.

The threshold is the percent-th linear-interpolation percentile of the
absolute values of every targeted weight pooled across all layers; a
per-layer mode computes one threshold per layer instead.  A mask entry
is 0 exactly when its |weight| was strictly below the threshold, so
ties at the threshold survive.  Masks are registered on the model for
its lifetime: every optimizer step re-zeroes the pruned positions, and
retraining runs until test accuracy returns to a target (by default the
pre-prune accuracy minus one percentage point).
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .cells import VANILLA_KINDS
from .errors import DomainError, InputError
from .model import RecurrentModel
from .numerics import Rng, percentile
from .reber import Dataset

REGAIN_MARGIN = 0.01
DEFAULT_SWEEP_PERCENTS = tuple(range(10, 101, 10))


class PruneTarget(str, Enum):
    INPUT_TO_HIDDEN = "i2h"
    HIDDEN_TO_HIDDEN = "h2h"
    BOTH = "both"


@dataclass(frozen=True)
class MaskSet:
    """Binary keep-masks per targeted matrix, with the settings that built them."""

    masks: dict[str, np.ndarray]
    target: PruneTarget
    threshold: dict[str, float]      # per parameter name
    percent: float | None = None

    def __post_init__(self):
        for name, m in self.masks.items():
            if not np.isin(m, (0.0, 1.0)).all():
                raise DomainError(f"mask for {name} has entries outside {{0, 1}}")


def targeted_blocks(model: RecurrentModel, target: PruneTarget
                    ) -> list[tuple[int, str, slice]]:
    """(layer index, parameter name, column slice) of every targeted block.

    Gate matrices of shape (hidden, hidden + input) keep their hidden
    columns first, so i2h is the trailing column block.
    """
    target = PruneTarget(target)
    blocks: list[tuple[int, str, slice]] = []
    for li, layer in enumerate(model.layers):
        H = layer.hidden_size
        if layer.kind in VANILLA_KINDS:
            if target in (PruneTarget.INPUT_TO_HIDDEN, PruneTarget.BOTH):
                blocks.append((li, f"layer{li}.U", slice(None)))
            if target in (PruneTarget.HIDDEN_TO_HIDDEN, PruneTarget.BOTH):
                blocks.append((li, f"layer{li}.W", slice(None)))
        else:
            for pname, arr in layer.params.items():
                if arr.ndim != 2:
                    continue
                if target == PruneTarget.BOTH:
                    blocks.append((li, f"layer{li}.{pname}", slice(None)))
                elif target == PruneTarget.HIDDEN_TO_HIDDEN:
                    blocks.append((li, f"layer{li}.{pname}", slice(0, H)))
                else:
                    blocks.append((li, f"layer{li}.{pname}", slice(H, None)))
    if not blocks:
        raise InputError("model has no targeted matrices")
    return blocks


def _pool(model: RecurrentModel, blocks) -> np.ndarray:
    return np.concatenate([np.abs(model.get_param(name)[:, sl]).ravel()
                           for _, name, sl in blocks])


def compute_threshold(model: RecurrentModel, percent: float,
                      target: PruneTarget) -> float:
    """Percentile of pooled |targeted weights| across all layers."""
    if not 1.0 <= percent <= 100.0:
        raise DomainError(f"percent {percent} outside [1, 100]")
    return percentile(_pool(model, targeted_blocks(model, target)), percent)


def compute_thresholds_per_layer(model: RecurrentModel, percent: float,
                                 target: PruneTarget) -> dict[int, float]:
    """One threshold per layer instead of one pooled threshold."""
    if not 1.0 <= percent <= 100.0:
        raise DomainError(f"percent {percent} outside [1, 100]")
    blocks = targeted_blocks(model, target)
    out: dict[int, float] = {}
    for li in sorted({b[0] for b in blocks}):
        layer_blocks = [b for b in blocks if b[0] == li]
        out[li] = percentile(_pool(model, layer_blocks), percent)
    return out


def build_masks(model: RecurrentModel, threshold: float | dict[int, float],
                target: PruneTarget, percent: float | None = None) -> MaskSet:
    """Keep-masks: 0 where |w| < threshold inside targeted blocks, 1 elsewhere.

    threshold is either one pooled value or a per-layer-index map.
    """
    target = PruneTarget(target)
    masks: dict[str, np.ndarray] = {}
    used: dict[str, float] = {}
    for li, name, sl in targeted_blocks(model, target):
        thr = threshold[li] if isinstance(threshold, dict) else float(threshold)
        if not np.isfinite(thr) or thr < 0:
            raise DomainError(f"threshold {thr} must be finite and non-negative")
        arr = model.get_param(name)
        mask = masks.setdefault(name, np.ones_like(arr))
        mask[:, sl] = (np.abs(arr[:, sl]) >= thr).astype(np.float64)
        used[name] = thr
    return MaskSet(masks=masks, target=target, threshold=used, percent=percent)


def apply_masks(model: RecurrentModel, mask_set: MaskSet) -> dict[str, float]:
    """Zero the masked positions and keep the masks active for life.

    Returns the per-matrix zero fraction after application.
    """
    model.register_masks(mask_set.masks)
    return {name: float((model.get_param(name) == 0.0).mean())
            for name in mask_set.masks}


def pooled_zero_fraction(model: RecurrentModel, target: PruneTarget) -> float:
    """Fraction of exact zeros among the targeted weights."""
    pooled = _pool(model, targeted_blocks(model, target))
    return float((pooled == 0.0).mean())


def prune(model: RecurrentModel, percent: float, target: PruneTarget,
          per_layer: bool = False) -> MaskSet:
    """Threshold, mask and apply in one move; masks stay registered."""
    if per_layer:
        thr: float | dict[int, float] = compute_thresholds_per_layer(
            model, percent, target)
    else:
        thr = compute_threshold(model, percent, target)
    mask_set = build_masks(model, thr, target, percent=percent)
    apply_masks(model, mask_set)
    return mask_set


def retrain_masked(model: RecurrentModel, mask_set: MaskSet, dataset: Dataset,
                   max_epochs: int, target_acc: float, rng: Rng,
                   batch_size: int = 32, lr: float = 1e-3,
                   log=None) -> tuple[int, list[dict]]:
    """Train until test accuracy reaches target_acc, re-masking every step.

    Returns (epochs_used, history); 0 epochs if already at target, and
    epochs_used == max_epochs when the target was never reached.
    """
    model.register_masks(mask_set.masks)
    if model.evaluate(dataset.test) >= target_acc:
        return 0, []
    model.reset_optimizer()
    history = model.train(dataset, epochs=max_epochs, batch_size=batch_size,
                          lr=lr, rng=rng, target_accuracy=target_acc, log=log)
    epochs_used = history[-1]["epoch"] if history else 0
    return epochs_used, history


@dataclass(frozen=True)
class SweepRow:
    variant: str
    target: PruneTarget
    percent: float
    threshold: dict[str, float]
    zero_fraction: float
    acc_before: float
    acc_after: float
    epochs_to_regain: int


def _sweep_point(trained_model: RecurrentModel, dataset: Dataset,
                 target: PruneTarget, percent: float, max_epochs: int,
                 batch_size: int, lr: float, per_layer: bool, rng: Rng,
                 acc_before: float, target_acc: float) -> SweepRow:
    pruned = trained_model.clone()
    mask_set = prune(pruned, percent, target, per_layer)
    acc_after = pruned.evaluate(dataset.test)
    epochs, _ = retrain_masked(pruned, mask_set, dataset, max_epochs,
                               target_acc, rng, batch_size=batch_size, lr=lr)
    return SweepRow(
        variant=trained_model.kind.value, target=target,
        percent=float(percent), threshold=mask_set.threshold,
        zero_fraction=pooled_zero_fraction(pruned, target),
        acc_before=acc_before, acc_after=acc_after,
        epochs_to_regain=epochs)


def prune_sweep(trained_model: RecurrentModel, dataset: Dataset, rng: Rng,
                target: PruneTarget = PruneTarget.BOTH,
                percents=DEFAULT_SWEEP_PERCENTS, max_epochs: int = 10,
                batch_size: int = 32, lr: float = 1e-3,
                per_layer: bool = False, jobs: int = 1,
                log=None) -> list[SweepRow]:
    """One row per percent: clone, prune, evaluate, retrain to regain.

    The regain bar is the unpruned model's test accuracy minus one
    percentage point; every row starts from a fresh clone, so rows are
    independent and can run in parallel without changing the result.
    """
    target = PruneTarget(target)
    acc_before = trained_model.evaluate(dataset.test)
    target_acc = acc_before - REGAIN_MARGIN
    rows: list[SweepRow] = []
    if jobs > 1 and len(percents) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_sweep_point, trained_model, dataset, target,
                            percent, max_epochs, batch_size, lr, per_layer,
                            rng.child(i), acc_before, target_acc)
                for i, percent in enumerate(percents)
            ]
            rows = [f.result() for f in futures]
    else:
        for i, percent in enumerate(percents):
            rows.append(_sweep_point(trained_model, dataset, target, percent,
                                     max_epochs, batch_size, lr, per_layer,
                                     rng.child(i), acc_before, target_acc))
    if log is not None:
        for row in rows:
            log(f"percent={row.percent:g}: zero_fraction={row.zero_fraction:.3f} "
                f"acc_after={row.acc_after:.4f} "
                f"epochs_to_regain={row.epochs_to_regain}")
    return rows


SWEEP_COLUMNS = ["variant", "target", "percent", "threshold", "zero_fraction",
                 "acc_before", "acc_after", "epochs_to_regain"]


def _threshold_cell(threshold: dict[str, float]) -> str:
    values = sorted(set(threshold.values()))
    if len(values) == 1:
        return repr(values[0])
    return ";".join(f"{name}={threshold[name]!r}" for name in sorted(threshold))


def sweep_to_csv(rows: list[SweepRow], path: str | Path,
                 header_comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([r.variant, r.target.value, r.percent,
                             _threshold_cell(r.threshold), repr(r.zero_fraction),
                             repr(r.acc_before), repr(r.acc_after),
                             r.epochs_to_regain])


def load_sweep_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        out.append({
            "variant": rec["variant"],
            "target": rec["target"],
            "percent": float(rec["percent"]),
            "threshold": rec["threshold"],
            "zero_fraction": float(rec["zero_fraction"]),
            "acc_before": float(rec["acc_before"]),
            "acc_after": float(rec["acc_after"]),
            "epochs_to_regain": int(rec["epochs_to_regain"]),
        })
    return out
