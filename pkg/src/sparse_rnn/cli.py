"""Command-line entry point for the experiment pipeline.

Five subcommands: gen-data (Reber dataset files), train (base model
checkpoint plus history), prune (threshold sweep CSV), randstruct
(randomly structured runs as JSONL records), analyze (correlations,
R-squared, importances and scatter data from a record file).

Configuration resolves flag > config file > built-in default, where the
config file holds flat key=value lines.  Every output file starts with
a header naming the tool version and a hash of the effective
configuration, and reruns with the same seed are byte-identical.  The
seed falls back to the SPARSE_RNN_SEED environment variable.  Exit
codes: 0 success, 2 configuration error, 3 I/O error, 4 broken internal
contract.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

from . import __version__
from .cells import CellKind
from .errors import (ConfigError, ContractViolation, DomainError, InputError,
                     ShapeError)
from .model import RecurrentModel, history_to_csv
from .numerics import Rng
from .pruning import (DEFAULT_SWEEP_PERCENTS, PruneTarget, prune_sweep,
                      sweep_to_csv)
from .randstruct import RunSettings, load_records, run_random_experiments
from .reber import build_dataset, load_dataset, save_dataset
from .analysis import (CIRCUMSTANCE_SUBSETS, correlation_report,
                       correlations_to_csv, importance_circumstances,
                       importances_to_csv, r2_to_csv, scatter_to_csv,
                       table_from_records)

VARIANTS = tuple(k.value for k in CellKind)

DEFAULTS = {
    "gen-data": {
        "total": 25000, "min_len": 11, "out": "reber", "seed": 0,
    },
    "train": {
        "variant": "gru", "data": "reber", "out": "model",
        "layers": 3, "hidden": 50, "d_emb": 50,
        "epochs": 50, "batch_size": 32, "lr": 0.001, "seed": 0,
    },
    "prune": {
        "model": "model.model.json", "data": "reber", "out": "sweep.csv",
        "target": "both", "percent": 0, "max_epochs": 10,
        "batch_size": 32, "lr": 0.001, "per_layer": False,
        "variant": "", "jobs": 1, "seed": 0,
    },
    "randstruct": {
        "variant": "gru", "data": "reber", "out": "records.jsonl",
        "per_family": 100, "epochs": 15, "batch_size": 128, "lr": 0.001,
        "node_min": 10, "node_max": 51, "ws_k": 4, "ws_p": 0.5, "ba_m": 2,
        "d_emb": 0, "jobs": 1, "seed": 0,
    },
    "analyze": {
        "records": "records.jsonl", "out": "analysis", "seed": 0,
        "n_trees": 100, "max_depth": 8,
    },
}


def load_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and '#' comments allowed."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _convert(key: str, value: str, default):
    try:
        if isinstance(default, bool):
            low = value.lower()
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"config key {key}: bad value {value!r}") from exc


class ExperimentConfig:
    """Effective settings of one command: flag > file > default."""

    def __init__(self, command: str, args: argparse.Namespace):
        defaults = DEFAULTS[command]
        file_values = load_config_file(args.config) if args.config else {}
        for key in file_values:
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r} for {command}")
        self.command = command
        self.values: dict = {}
        for key, default in defaults.items():
            flag = getattr(args, key, None)
            if flag is not None:
                self.values[key] = flag
            elif key in file_values:
                self.values[key] = _convert(key, file_values[key], default)
            else:
                self.values[key] = default
        if self.values.get("seed") == defaults.get("seed") and \
                getattr(args, "seed", None) is None and "seed" not in file_values:
            env = os.environ.get("SPARSE_RNN_SEED")
            if env is not None:
                try:
                    self.values["seed"] = int(env)
                except ValueError as exc:
                    raise ConfigError(
                        f"SPARSE_RNN_SEED must be an integer, got {env!r}") from exc

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    def hash(self) -> str:
        payload = "\n".join(
            f"{k}={self.values[k]!r}" for k in sorted(self.values))
        digest = hashlib.sha256(
            f"{self.command}\n{payload}".encode()).hexdigest()
        return digest[:12]

    def header(self) -> str:
        return f"sparse-rnn {__version__} config={self.hash()}"


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--seed", type=int, default=None,
                     help="RNG seed (falls back to SPARSE_RNN_SEED, then 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-rnn",
        description="Sparsity experiments on recurrent networks")
    parser.add_argument("--version", action="version",
                        version=f"sparse-rnn {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-data", help="generate a Reber grammar dataset")
    _add_common(p)
    p.add_argument("--total", type=int, default=None,
                   help="total sequence count, half valid, half corrupted")
    p.add_argument("--min-len", dest="min_len", type=int, default=None)
    p.add_argument("--out", default=None, help="output base path")

    p = subs.add_parser("train", help="train a base recurrent classifier")
    _add_common(p)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--data", default=None, help="dataset base path")
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--d-emb", dest="d_emb", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--out", default=None, help="output prefix")

    p = subs.add_parser("prune", help="magnitude-prune a trained checkpoint")
    _add_common(p)
    p.add_argument("--model", default=None, help="checkpoint path")
    p.add_argument("--data", default=None)
    p.add_argument("--target", choices=[t.value for t in PruneTarget],
                   default=None)
    p.add_argument("--percent", type=int, default=None,
                   help="single percent instead of the 10..100 sweep")
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None,
                   help="retraining budget per sweep point")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--per-layer", dest="per_layer", action="store_const",
                   const=True, default=None,
                   help="one threshold per layer instead of pooled")
    p.add_argument("--variant", choices=VARIANTS, default=None,
                   help="assert the checkpoint's cell kind")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None, help="sweep CSV path")

    p = subs.add_parser("randstruct",
                        help="train models wired from random graphs")
    _add_common(p)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--per-family", dest="per_family", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--node-min", dest="node_min", type=int, default=None)
    p.add_argument("--node-max", dest="node_max", type=int, default=None,
                   help="exclusive upper bound on node count")
    p.add_argument("--ws-k", dest="ws_k", type=int, default=None)
    p.add_argument("--ws-p", dest="ws_p", type=float, default=None)
    p.add_argument("--ba-m", dest="ba_m", type=int, default=None)
    p.add_argument("--d-emb", dest="d_emb", type=int, default=None,
                   help="embedding width; 0 means one per source node")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None, help="JSONL record path (appended)")

    p = subs.add_parser("analyze",
                        help="correlations, regressors and plot data")
    _add_common(p)
    p.add_argument("--records", default=None, help="JSONL record path")
    p.add_argument("--n-trees", dest="n_trees", type=int, default=None)
    p.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    p.add_argument("--out", default=None, help="output prefix")
    return parser


def cmd_gen_data(cfg: ExperimentConfig) -> int:
    if cfg.total < 2 or cfg.total % 2 != 0:
        raise ConfigError(f"--total must be even and >= 2, got {cfg.total}")
    if cfg.min_len < 1:
        raise ConfigError(f"--min-len must be positive, got {cfg.min_len}")
    ds = build_dataset(cfg.total, Rng(cfg.seed), cfg.min_len)
    save_dataset(ds, cfg.out, header_comment=cfg.header())
    print(f"wrote {len(ds.train)} train / {len(ds.test)} test sequences "
          f"to {cfg.out}.*")
    return 0


def cmd_train(cfg: ExperimentConfig) -> int:
    for key in ("layers", "hidden", "d_emb", "batch_size"):
        if cfg.values[key] < 1:
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")
    if cfg.epochs < 0:
        raise ConfigError("--epochs must be >= 0")
    dataset = load_dataset(cfg.data)
    rng = Rng(cfg.seed)
    model = RecurrentModel(cfg.variant, cfg.layers, cfg.hidden, cfg.d_emb,
                           rng.child(0))
    history = model.train(dataset, epochs=cfg.epochs,
                          batch_size=cfg.batch_size, lr=cfg.lr,
                          rng=rng.child(1), log=print)
    model.save(f"{cfg.out}.model.json", header=cfg.header())
    history_to_csv(history, f"{cfg.out}.history.csv",
                   header_comment=cfg.header())
    final = history[-1]["test_accuracy"] if history else \
        model.evaluate(dataset.test)
    print(f"final test accuracy {final:.4f}; "
          f"wrote {cfg.out}.model.json and {cfg.out}.history.csv")
    return 0


def cmd_prune(cfg: ExperimentConfig) -> int:
    if cfg.percent and not 1 <= cfg.percent <= 100:
        raise ConfigError(f"--percent must be in [1, 100], got {cfg.percent}")
    if cfg.max_epochs < 0 or cfg.jobs < 1:
        raise ConfigError("--max-epochs must be >= 0 and --jobs >= 1")
    model = RecurrentModel.load(cfg.model)
    if cfg.variant and model.kind.value != cfg.variant:
        raise ConfigError(f"checkpoint is {model.kind.value}, "
                          f"--variant says {cfg.variant}")
    dataset = load_dataset(cfg.data)
    percents = (cfg.percent,) if cfg.percent else DEFAULT_SWEEP_PERCENTS
    rows = prune_sweep(model, dataset, Rng(cfg.seed),
                       target=PruneTarget(cfg.target), percents=percents,
                       max_epochs=cfg.max_epochs, batch_size=cfg.batch_size,
                       lr=cfg.lr, per_layer=bool(cfg.per_layer),
                       jobs=cfg.jobs, log=print)
    sweep_to_csv(rows, cfg.out, header_comment=cfg.header())
    print(f"wrote {len(rows)} sweep rows to {cfg.out}")
    return 0


def cmd_randstruct(cfg: ExperimentConfig) -> int:
    if cfg.per_family < 1 or cfg.jobs < 1:
        raise ConfigError("--per-family and --jobs must be positive")
    if not 10 <= cfg.node_min < cfg.node_max:
        raise ConfigError(f"need 10 <= node-min < node-max, got "
                          f"{cfg.node_min} and {cfg.node_max}")
    dataset = load_dataset(cfg.data)
    settings = RunSettings(
        epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
        node_range=(cfg.node_min, cfg.node_max), ws_k=cfg.ws_k,
        ws_p=cfg.ws_p, ba_m=cfg.ba_m,
        d_emb=cfg.d_emb if cfg.d_emb else None)
    records = run_random_experiments(
        cfg.per_family, cfg.variant, dataset, Rng(cfg.seed),
        settings=settings, out_path=cfg.out, header=cfg.header(),
        jobs=cfg.jobs, log=print)
    print(f"{len(records)} records in {cfg.out}")
    return 0


def cmd_analyze(cfg: ExperimentConfig) -> int:
    if cfg.n_trees < 1 or cfg.max_depth < 1:
        raise ConfigError("--n-trees and --max-depth must be positive")
    _, records = load_records(cfg.records)
    if not records:
        raise InputError(f"{cfg.records} holds no records")
    table = table_from_records(records)
    header = cfg.header()
    report = correlation_report(table)
    correlations_to_csv(report, f"{cfg.out}.correlations.csv", header)
    circumstances = importance_circumstances(
        table, Rng(cfg.seed), n_trees=cfg.n_trees, max_depth=cfg.max_depth)
    r2_to_csv(circumstances, f"{cfg.out}.r2.csv", header)
    for subset in CIRCUMSTANCE_SUBSETS:
        importances_to_csv(circumstances[subset],
                           f"{cfg.out}.importances.{subset}.csv", header)
    for column in table.columns:
        scatter_to_csv(table, column, f"{cfg.out}.scatter.{column}.csv",
                       header)
    print(f"analyzed {table.n_rows} records into {cfg.out}.*")
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "prune": cmd_prune,
    "randstruct": cmd_randstruct,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig(args.command, args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, InputError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ContractViolation as exc:
        print(f"internal contract broken: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
