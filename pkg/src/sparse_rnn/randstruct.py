"""Recurrent models wired from random DAGs, and the experiment runner.

Each graph node becomes one hidden unit.  Nodes sharing a layer index
form a group; a group is a recurrent layer whose hidden-to-hidden block
is full (recurrence within the group) and whose input columns are the
concatenated same-timestep activations of every earlier group, masked
so a unit only reads from its DAG parents (skip-level arcs connect
directly).  Source nodes (layer 0) read the embedding densely; a linear
head reads the concatenated sink activations at each sequence's last
character.  The structural masks are registered for the model's
lifetime, so weights outside DAG arcs stay exactly zero through
training.

The runner trains one such model per sampled graph and records the
graph's 23 measured properties plus variant, family, seed and test
accuracy as one JSON object per line.  Finished runs are keyed by
(family, seed), so an interrupted sweep resumes without repeating work.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cells import CellKind, RecurrentLayer, VANILLA_KINDS, layer_step, \
    layer_step_backward
from .errors import InputError
from .graphs import ArchGraph, UGraph, generate_arch
from .metrics import RECORD_KEYS, full_record
from .model import (ForwardTrace, N_CLASSES, SequenceClassifier, VOCAB,
                    pad_batch)
from .numerics import Rng
from .reber import Dataset

RECORD_EXTRA_KEYS = ("variant", "family", "seed", "test_acc")


class RandStructModel(SequenceClassifier):
    """Embedding + DAG-wired recurrent groups + head over sink units."""

    def __init__(self, arch: ArchGraph, kind: CellKind | str,
                 d_emb: int | None = None, rng: Rng | None = None):
        super().__init__()
        self.arch = arch
        self.kind = CellKind(kind)
        if rng is None:
            rng = Rng(arch.seed).child(1)
        layer_of = arch.layers()
        n_groups = max(layer_of.values()) + 1
        self.groups: list[list[int]] = [[] for _ in range(n_groups)]
        for v in range(arch.dag.n):
            self.groups[layer_of[v]].append(v)
        self.prefix: list[list[int]] = []
        running: list[int] = []
        for g in range(n_groups):
            self.prefix.append(list(running))
            running.extend(self.groups[g])
        if d_emb is None:
            d_emb = len(self.groups[0])
        self.d_emb = d_emb

        emb_bound = 1.0 / np.sqrt(d_emb)
        self.embedding = rng.uniform(-emb_bound, emb_bound, (VOCAB, d_emb))
        self.group_layers: list[RecurrentLayer] = []
        for g, nodes in enumerate(self.groups):
            input_size = d_emb if g == 0 else len(self.prefix[g])
            self.group_layers.append(
                RecurrentLayer(self.kind, input_size, len(nodes), rng))
        self.sinks = arch.dag.sinks()
        self.sink_pos = [self._node_pos(s) for s in self.sinks]
        head_bound = 1.0 / np.sqrt(N_CLASSES)
        self.head_W = rng.uniform(-head_bound, head_bound,
                                  (N_CLASSES, len(self.sinks)))
        self.head_b = np.zeros(N_CLASSES)
        self.register_masks(self._structural_masks())

    def _node_pos(self, v: int) -> tuple[int, int]:
        for g, nodes in enumerate(self.groups):
            if v in nodes:
                return g, nodes.index(v)
        raise InputError(f"node {v} not in any group")

    def _structural_masks(self) -> dict[str, np.ndarray]:
        """Input-column masks from DAG adjacency; group 0 reads densely."""
        arcs = set(self.arch.dag.arcs)
        masks: dict[str, np.ndarray] = {}
        for g in range(1, len(self.groups)):
            rows = self.groups[g]
            cols = self.prefix[g]
            block = np.zeros((len(rows), len(cols)))
            for i, v in enumerate(rows):
                for j, u in enumerate(cols):
                    if (u, v) in arcs:
                        block[i, j] = 1.0
            layer = self.group_layers[g]
            H = layer.hidden_size
            for pname, arr in layer.params.items():
                if arr.ndim != 2:
                    continue
                if layer.kind in VANILLA_KINDS:
                    if pname == "U":
                        masks[f"group{g}.U"] = block.copy()
                else:
                    mask = np.ones_like(arr)
                    mask[:, H:] = block
                    masks[f"group{g}.{pname}"] = mask
        return masks

    def iter_params(self):
        yield "embedding", self.embedding
        for g, layer in enumerate(self.group_layers):
            for pname, arr in layer.params.items():
                yield f"group{g}.{pname}", arr
        yield "head_W", self.head_W
        yield "head_b", self.head_b

    # -- forward -----------------------------------------------------------

    def forward(self, texts: list[str]) -> ForwardTrace:
        ids, lengths = pad_batch(texts)
        return self.forward_ids(ids, lengths)

    def forward_ids(self, ids: np.ndarray, lengths: np.ndarray) -> ForwardTrace:
        B, T = ids.shape
        G = len(self.groups)
        x_seq = self.embedding[ids]
        caches = [[None] * T for _ in range(G)]
        h_seq = [[None] * T for _ in range(G)]
        h = [np.zeros((B, len(nodes))) for nodes in self.groups]
        c = [np.zeros((B, len(nodes))) for nodes in self.groups]
        for t in range(T):
            acts: list[np.ndarray] = []
            for g, layer in enumerate(self.group_layers):
                x = x_seq[:, t, :] if g == 0 else np.concatenate(acts, axis=1)
                h_new, c_new, cache = layer_step(layer, x, h[g], c[g])
                caches[g][t] = cache
                h_seq[g][t] = h_new
                h[g] = h_new
                if c_new is not None:
                    c[g] = c_new
                acts.append(h_new)
        read_pos = lengths - 1
        group_read = [
            np.stack([h_seq[g][read_pos[b]][b] for b in range(B)])
            for g in range(G)
        ]
        h_read = np.concatenate(
            [group_read[g][:, idx:idx + 1] for g, idx in self.sink_pos], axis=1)
        logits = h_read @ self.head_W.T + self.head_b
        return ForwardTrace(ids, lengths, caches, h_seq, h_read, logits,
                            self._version)

    # -- backward ----------------------------------------------------------

    def backward(self, trace: ForwardTrace, labels) -> dict[str, np.ndarray]:
        labels = self._check_trace(trace, labels)
        B, T = trace.ids.shape
        G = len(self.groups)
        widths = [len(nodes) for nodes in self.groups]
        grads = self.zero_grads()
        group_grads = [
            {pname: grads[f"group{g}.{pname}"] for pname in layer.params}
            for g, layer in enumerate(self.group_layers)
        ]
        dh_read = self._head_backward(trace, labels, grads)
        inject = [np.zeros((B, w)) for w in widths]
        for col, (g, idx) in enumerate(self.sink_pos):
            inject[g][:, idx] += dh_read[:, col]
        read_pos = trace.lengths - 1
        carry_dh = [np.zeros((B, w)) for w in widths]
        carry_dc = [np.zeros((B, w)) for w in widths]
        demb = grads["embedding"]
        for t in range(T - 1, -1, -1):
            at_read = read_pos == t
            pending = [np.zeros((B, w)) for w in widths]
            for g in range(G - 1, -1, -1):
                dh = carry_dh[g] + pending[g]
                if at_read.any():
                    dh[at_read] += inject[g][at_read]
                dx, dh_prev, dc_prev = layer_step_backward(
                    self.group_layers[g], trace.caches[g][t], dh,
                    carry_dc[g], group_grads[g])
                carry_dh[g] = dh_prev
                if dc_prev is not None:
                    carry_dc[g] = dc_prev
                if g == 0:
                    np.add.at(demb, trace.ids[:, t], dx)
                else:
                    offset = 0
                    for j in range(g):
                        pending[j] += dx[:, offset:offset + widths[j]]
                        offset += widths[j]
        return grads

    # -- copies and persistence --------------------------------------------

    def clone(self) -> "RandStructModel":
        out = object.__new__(RandStructModel)
        SequenceClassifier.__init__(out)
        out.arch = self.arch
        out.kind = self.kind
        out.d_emb = self.d_emb
        out.groups = [list(g) for g in self.groups]
        out.prefix = [list(p) for p in self.prefix]
        out.embedding = self.embedding.copy()
        out.group_layers = [layer.clone() for layer in self.group_layers]
        out.sinks = list(self.sinks)
        out.sink_pos = list(self.sink_pos)
        out.head_W = self.head_W.copy()
        out.head_b = self.head_b.copy()
        out.masks = {name: mask.copy() for name, mask in self.masks.items()}
        return out

    def save(self, path: str | Path, header: str | None = None):
        doc = {
            "format": "sparse-rnn-randstruct",
            "kind": self.kind.value,
            "d_emb": self.d_emb,
            "arch": {
                "family": self.arch.family,
                "params": self.arch.params,
                "seed": self.arch.seed,
                "n": self.arch.graph.n,
                "edges": [list(e) for e in self.arch.graph.edges],
            },
            "shapes": {name: list(arr.shape) for name, arr in self.iter_params()},
            "embedding": self.embedding.tolist(),
            "groups": [
                {name: arr.tolist() for name, arr in layer.params.items()}
                for layer in self.group_layers
            ],
            "head_W": self.head_W.tolist(),
            "head_b": self.head_b.tolist(),
            "masks": {name: mask.tolist() for name, mask in self.masks.items()},
        }
        if header is not None:
            doc["header"] = header
        Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RandStructModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not a valid model file: {exc}") from exc
        if doc.get("format") != "sparse-rnn-randstruct":
            raise InputError(f"{path} is not a graph-structured model file")
        arch = ArchGraph(
            doc["arch"]["family"], doc["arch"]["params"], doc["arch"]["seed"],
            UGraph(doc["arch"]["n"],
                   tuple(tuple(e) for e in doc["arch"]["edges"])))
        model = cls(arch, doc["kind"], d_emb=doc["d_emb"], rng=Rng(0))
        model.embedding = np.asarray(doc["embedding"], dtype=np.float64)
        for layer, saved in zip(model.group_layers, doc["groups"]):
            for name in layer.params:
                layer.params[name] = np.asarray(saved[name], dtype=np.float64)
        model.head_W = np.asarray(doc["head_W"], dtype=np.float64)
        model.head_b = np.asarray(doc["head_b"], dtype=np.float64)
        model.masks = {name: np.asarray(mask, dtype=np.float64)
                       for name, mask in doc["masks"].items()}
        model._apply_masks()
        return model


def build_model(arch: ArchGraph, kind: CellKind | str,
                d_emb: int | None = None, rng: Rng | None = None
                ) -> RandStructModel:
    """Model from an architecture; d_emb defaults to the source count."""
    return RandStructModel(arch, kind, d_emb=d_emb, rng=rng)


# -- experiment runner -----------------------------------------------------

@dataclass(frozen=True)
class RunSettings:
    """Hyper-parameters for one corpus of randomly structured runs."""

    epochs: int = 15
    batch_size: int = 128
    lr: float = 1e-3
    node_range: tuple[int, int] = (10, 51)   # uniform, upper exclusive
    ws_k: int = 4
    ws_p: float = 0.5
    ba_m: int = 2
    d_emb: int | None = None


def _plan_run(rng: Rng, index: int, count_per_family: int,
              settings: RunSettings) -> tuple[str, int, int]:
    """(family, node count, graph seed) of run #index, from its own stream."""
    sub = rng.child(index)
    family = "ws" if index < count_per_family else "ba"
    lo, hi = settings.node_range
    n = int(sub.integers(lo, hi))
    arch_seed = int(sub.integers(0, 2 ** 31))
    return family, n, arch_seed


def _run_one(rng: Rng, index: int, count_per_family: int,
             settings: RunSettings, kind: CellKind, dataset: Dataset) -> dict:
    family, n, arch_seed = _plan_run(rng, index, count_per_family, settings)
    sub = rng.child(index)
    arch = generate_arch(family, n, arch_seed, k=settings.ws_k,
                         p=settings.ws_p, m=settings.ba_m)
    model = RandStructModel(arch, kind, d_emb=settings.d_emb,
                            rng=sub.child(100))
    model.train(dataset, epochs=settings.epochs,
                batch_size=settings.batch_size, lr=settings.lr,
                rng=sub.child(101))
    record = {k: float(v) for k, v in full_record(arch).items()}
    record["variant"] = kind.value
    record["family"] = family
    record["seed"] = arch_seed
    record["test_acc"] = model.evaluate(dataset.test)
    return record


def validate_record(record: dict):
    expected = set(RECORD_KEYS) | set(RECORD_EXTRA_KEYS)
    if set(record) != expected:
        missing = expected - set(record)
        extra = set(record) - expected
        raise InputError(f"bad record keys: missing {sorted(missing)}, "
                         f"extra {sorted(extra)}")


def load_records(path: str | Path) -> tuple[str | None, list[dict]]:
    """Read a JSONL record file; returns (header line content, records).

    A trailing half-written line (interrupted run) is dropped; damage
    anywhere else is an error.
    """
    lines = Path(path).read_text().splitlines()
    header = None
    records: list[dict] = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break
            raise InputError(f"{path}: corrupt record on line {i + 1}")
        if i == 0 and isinstance(obj, dict) and obj.get("format") == \
                "sparse-rnn-records":
            header = obj.get("header")
            continue
        validate_record(obj)
        records.append(obj)
    return header, records


def _append_line(path: Path, obj: dict):
    with open(path, "a") as fh:
        fh.write(json.dumps(obj, sort_keys=True) + "\n")
        fh.flush()


def run_random_experiments(count_per_family: int, kind: CellKind | str,
                           dataset: Dataset, rng: Rng,
                           settings: RunSettings = RunSettings(),
                           out_path: str | Path | None = None,
                           header: str | None = None, jobs: int = 1,
                           log=None) -> list[dict]:
    """Train one model per sampled graph; two families, count each.

    With out_path, each finished record is appended immediately and
    records already present (matched by family and seed) are not
    recomputed, so an interrupted corpus resumes where it stopped.
    Returns all records sorted by (family, seed).
    """
    kind = CellKind(kind)
    done: dict[tuple[str, int], dict] = {}
    path = Path(out_path) if out_path is not None else None
    if path is not None and path.exists():
        _, existing = load_records(path)
        done = {(r["family"], r["seed"]): r for r in existing}
    elif path is not None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"format": "sparse-rnn-records",
                                 "header": header}, sort_keys=True) + "\n")

    total = 2 * count_per_family
    plans = [_plan_run(rng, i, count_per_family, settings)
             for i in range(total)]
    pending = [i for i in range(total)
               if (plans[i][0], plans[i][2]) not in done]

    results: dict[int, dict] = {}
    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                i: pool.submit(_run_one, rng, i, count_per_family, settings,
                               kind, dataset)
                for i in pending
            }
            for i in pending:        # plan order keeps the file deterministic
                results[i] = futures[i].result()
                if path is not None:
                    _append_line(path, results[i])
                if log is not None:
                    log(f"run {i}: {plans[i][0]} n={plans[i][1]} "
                        f"acc={results[i]['test_acc']:.4f}")
    else:
        for i in pending:
            results[i] = _run_one(rng, i, count_per_family, settings, kind,
                                  dataset)
            if path is not None:
                _append_line(path, results[i])
            if log is not None:
                log(f"run {i}: {plans[i][0]} n={plans[i][1]} "
                    f"acc={results[i]['test_acc']:.4f}")

    merged = list(done.values()) + [results[i] for i in pending]
    merged.sort(key=lambda r: (r["family"], r["seed"]))
    return merged
