"""Recurrent sequence classifiers trained with BPTT and Adam.

The base model is a 128-row character embedding (rows addressed by
7-bit code point), a stack of recurrent layers of one shared cell kind,
and a linear head that reads the top-layer state at each sequence's
last character and emits two logits (invalid, valid).  Initial hidden
and cell states are zero.  Sequences in a batch are right-padded; the
readout position makes padding inert, and no gradient flows out of
padded steps.

Weight matrices start uniform in (-1/sqrt(D), 1/sqrt(D)) where D is the
length of the vector the matrix produces; biases start at zero.

SequenceClassifier carries everything that does not depend on the
wiring: the optimizer, lifetime masks, the training loop and
evaluation.  The graph-structured variant shares it.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cells import (CellKind, RecurrentLayer, VANILLA_KINDS, layer_step,
                    layer_step_backward)
from .errors import ContractViolation, DomainError, InputError, ShapeError
from .numerics import Rng
from .reber import Dataset, LabeledSequence

VOCAB = 128
N_CLASSES = 2

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def encode_text(text: str) -> list[int]:
    """Map characters to embedding rows by code point (must be < 128)."""
    ids = []
    for ch in text:
        code = ord(ch)
        if code >= VOCAB:
            raise InputError(f"character {ch!r} is outside the 7-bit range")
        ids.append(code)
    return ids


def pad_batch(texts: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad encoded texts with id 0.  Returns (ids (B, T), lengths (B,))."""
    if not texts:
        raise InputError("empty batch")
    encoded = [encode_text(t) for t in texts]
    lengths = np.array([len(e) for e in encoded], dtype=np.int64)
    if lengths.min() == 0:
        raise InputError("empty sequence in batch")
    T = int(lengths.max())
    ids = np.zeros((len(texts), T), dtype=np.int64)
    for b, e in enumerate(encoded):
        ids[b, : len(e)] = e
    return ids, lengths


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true class."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if logits.shape[0] != labels.shape[0]:
        raise ShapeError(f"{logits.shape[0]} logit rows vs {labels.shape[0]} labels")
    if ((labels < 0) | (labels >= logits.shape[1])).any():
        raise InputError(f"labels must lie in [0, {logits.shape[1]})")
    p = softmax(logits)
    picked = p[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(picked)))


class ForwardTrace:
    """Everything a backward pass needs, bound to one parameter version."""

    def __init__(self, ids, lengths, caches, h_seq, h_read, logits, version):
        self.ids = ids
        self.lengths = lengths
        self.caches = caches      # caches[layer][t]
        self.h_seq = h_seq        # h_seq[layer][t] -> (B, H)
        self.h_read = h_read
        self.logits = logits
        self.version = version


class SequenceClassifier:
    """Shared trainer core: Adam, lifetime masks, batching, evaluation.

    Subclasses define the parameters (iter_params), the forward pass
    over padded id batches, and the matching backward pass.
    """

    def __init__(self):
        self.masks: dict[str, np.ndarray] = {}
        self._version = 0
        self._adam_state: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self._adam_t = 0

    # subclasses implement: iter_params(), forward(texts) -> trace,
    # backward(trace, labels) -> grads

    def iter_params(self):
        raise NotImplementedError

    def forward(self, texts: list[str]) -> ForwardTrace:
        raise NotImplementedError

    def backward(self, trace: ForwardTrace, labels) -> dict[str, np.ndarray]:
        raise NotImplementedError

    # -- parameter plumbing ------------------------------------------------

    def get_param(self, name: str) -> np.ndarray:
        for n, arr in self.iter_params():
            if n == name:
                return arr
        raise InputError(f"unknown parameter {name!r}")

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.iter_params()}

    def n_params(self) -> int:
        return sum(arr.size for _, arr in self.iter_params())

    def register_masks(self, masks: dict[str, np.ndarray]):
        """Install zero/one masks by parameter name and apply them now.

        Masks persist for the model's lifetime: every optimizer step
        re-applies them, so masked entries stay exactly zero.
        """
        for name, mask in masks.items():
            arr = self.get_param(name)
            if mask.shape != arr.shape:
                raise ShapeError(
                    f"mask for {name} has shape {mask.shape}, expected {arr.shape}")
            self.masks[name] = np.asarray(mask, dtype=np.float64)
        self._apply_masks()
        self._version += 1

    def _apply_masks(self):
        for name, mask in self.masks.items():
            arr = self.get_param(name)
            arr *= mask

    # -- optimizer ---------------------------------------------------------

    def adam_step(self, grads: dict[str, np.ndarray], lr: float):
        """One Adam update; registered masks are re-applied afterwards."""
        self._adam_t += 1
        t = self._adam_t
        for name, arr in self.iter_params():
            g = grads[name]
            if name not in self._adam_state:
                self._adam_state[name] = (np.zeros_like(arr), np.zeros_like(arr))
            m, v = self._adam_state[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            m_hat = m / (1.0 - ADAM_BETA1 ** t)
            v_hat = v / (1.0 - ADAM_BETA2 ** t)
            arr -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        self._apply_masks()
        self._version += 1

    def reset_optimizer(self):
        self._adam_state = {}
        self._adam_t = 0

    # -- training and evaluation -------------------------------------------

    def predict(self, texts: list[str]) -> np.ndarray:
        return self.forward(texts).logits.argmax(axis=1)

    def evaluate(self, seqs: list[LabeledSequence], batch_size: int = 256) -> float:
        """Fraction of argmax predictions matching the labels."""
        acc, _ = self.evaluate_with_loss(seqs, batch_size)
        return acc

    def evaluate_with_loss(self, seqs: list[LabeledSequence],
                           batch_size: int = 256) -> tuple[float, float]:
        """(accuracy, mean cross-entropy) over a labeled split."""
        if not seqs:
            raise DomainError("cannot evaluate an empty split")
        correct = 0
        loss_sum = 0.0
        for start in range(0, len(seqs), batch_size):
            chunk = seqs[start:start + batch_size]
            texts = [s.text for s in chunk]
            labels = np.array([s.label for s in chunk], dtype=np.int64)
            trace = self.forward(texts)
            loss_sum += cross_entropy(trace.logits, labels) * len(chunk)
            correct += int((trace.logits.argmax(axis=1) == labels).sum())
        return correct / len(seqs), loss_sum / len(seqs)

    def train(self, dataset: Dataset, epochs: int, batch_size: int, lr: float,
              rng: Rng, target_accuracy: float | None = None,
              log=None) -> list[dict]:
        """Adam training with per-epoch shuffle and length-sorted batches.

        Returns the per-epoch history.  If target_accuracy is given,
        training stops after the first epoch whose test accuracy reaches
        it.
        """
        history: list[dict] = []
        for epoch in range(1, epochs + 1):
            order = list(rng.permutation(len(dataset.train)))
            order.sort(key=lambda i: -len(dataset.train[i].text))
            starts = list(range(0, len(order), batch_size))
            rng.shuffle(starts)
            loss_sum = 0.0
            correct = 0
            for start in starts:
                batch = [dataset.train[i] for i in order[start:start + batch_size]]
                texts = [s.text for s in batch]
                labels = np.array([s.label for s in batch], dtype=np.int64)
                trace = self.forward(texts)
                loss = cross_entropy(trace.logits, labels)
                grads = self.backward(trace, labels)
                self.adam_step(grads, lr)
                loss_sum += loss * len(batch)
                correct += int((trace.logits.argmax(axis=1) == labels).sum())
            test_acc, test_loss = self.evaluate_with_loss(dataset.test)
            row = {
                "epoch": epoch,
                "train_loss": loss_sum / len(order),
                "train_accuracy": correct / len(order),
                "test_accuracy": test_acc,
                "test_loss": test_loss,
            }
            history.append(row)
            if log is not None:
                log(f"epoch {epoch}: train_loss={row['train_loss']:.4f} "
                    f"train_acc={row['train_accuracy']:.4f} test_acc={test_acc:.4f}")
            if target_accuracy is not None and test_acc >= target_accuracy:
                break
        return history

    # -- shared backward pieces --------------------------------------------

    def _check_trace(self, trace: ForwardTrace, labels) -> np.ndarray:
        if trace.version != self._version:
            raise ContractViolation(
                "trace is stale: parameters changed after the forward pass")
        labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        if labels.shape[0] != trace.ids.shape[0]:
            raise ShapeError(
                f"{trace.ids.shape[0]} sequences vs {labels.shape[0]} labels")
        return labels

    def _head_backward(self, trace: ForwardTrace, labels: np.ndarray,
                       grads: dict[str, np.ndarray]) -> np.ndarray:
        """Cross-entropy + head gradients; returns d(h_read)."""
        B = trace.ids.shape[0]
        p = softmax(trace.logits)
        dlogits = p.copy()
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B
        grads["head_W"] += dlogits.T @ trace.h_read
        grads["head_b"] += dlogits.sum(axis=0)
        return dlogits @ self.head_W


class RecurrentModel(SequenceClassifier):
    """Embedding + stacked recurrent layers + two-way linear head."""

    def __init__(self, kind: CellKind | str, n_layers: int, hidden_size: int,
                 d_emb: int, rng: Rng):
        super().__init__()
        if n_layers < 1 or hidden_size < 1 or d_emb < 1:
            raise InputError("n_layers, hidden_size and d_emb must be positive")
        self.kind = CellKind(kind)
        self.n_layers = n_layers
        self.hidden_size = hidden_size
        self.d_emb = d_emb
        emb_bound = 1.0 / np.sqrt(d_emb)
        self.embedding = rng.uniform(-emb_bound, emb_bound, (VOCAB, d_emb))
        self.layers: list[RecurrentLayer] = []
        size_in = d_emb
        for _ in range(n_layers):
            self.layers.append(RecurrentLayer(self.kind, size_in, hidden_size, rng))
            size_in = hidden_size
        head_bound = 1.0 / np.sqrt(N_CLASSES)
        self.head_W = rng.uniform(-head_bound, head_bound, (N_CLASSES, hidden_size))
        self.head_b = np.zeros(N_CLASSES)

    def iter_params(self):
        """Yield (name, array) over every trainable array, in a fixed order."""
        yield "embedding", self.embedding
        for idx, layer in enumerate(self.layers):
            for pname, arr in layer.params.items():
                yield f"layer{idx}.{pname}", arr
        yield "head_W", self.head_W
        yield "head_b", self.head_b

    # -- forward -----------------------------------------------------------

    def forward(self, texts: list[str]) -> ForwardTrace:
        ids, lengths = pad_batch(texts)
        return self.forward_ids(ids, lengths)

    def forward_ids(self, ids: np.ndarray, lengths: np.ndarray) -> ForwardTrace:
        B, T = ids.shape
        x_seq = self.embedding[ids]          # (B, T, d_emb)
        caches = [[None] * T for _ in self.layers]
        h_seq = [[None] * T for _ in self.layers]
        h = [np.zeros((B, self.hidden_size)) for _ in self.layers]
        c = [np.zeros((B, self.hidden_size)) for _ in self.layers]
        for t in range(T):
            x = x_seq[:, t, :]
            for li, layer in enumerate(self.layers):
                h_new, c_new, cache = layer_step(layer, x, h[li], c[li])
                caches[li][t] = cache
                h_seq[li][t] = h_new
                h[li] = h_new
                if c_new is not None:
                    c[li] = c_new
                x = h_new
        read_pos = lengths - 1
        top = self.n_layers - 1
        h_read = np.stack([h_seq[top][read_pos[b]][b] for b in range(B)])
        logits = h_read @ self.head_W.T + self.head_b
        return ForwardTrace(ids, lengths, caches, h_seq, h_read, logits,
                            self._version)

    # -- backward ----------------------------------------------------------

    def backward(self, trace: ForwardTrace, labels) -> dict[str, np.ndarray]:
        """Exact BPTT gradients of the mean cross-entropy over the batch."""
        labels = self._check_trace(trace, labels)
        B, T = trace.ids.shape
        grads = self.zero_grads()
        layer_grads = [
            {pname: grads[f"layer{li}.{pname}"] for pname in layer.params}
            for li, layer in enumerate(self.layers)
        ]
        dh_read = self._head_backward(trace, labels, grads)
        read_pos = trace.lengths - 1
        top = self.n_layers - 1
        carry_dh = [np.zeros((B, self.hidden_size)) for _ in self.layers]
        carry_dc = [np.zeros((B, self.hidden_size)) for _ in self.layers]
        demb = grads["embedding"]
        for t in range(T - 1, -1, -1):
            dx_above = None
            for li in range(top, -1, -1):
                dh = carry_dh[li].copy()
                if dx_above is not None:
                    dh += dx_above
                if li == top:
                    at_read = read_pos == t
                    if at_read.any():
                        dh[at_read] += dh_read[at_read]
                dx, dh_prev, dc_prev = layer_step_backward(
                    self.layers[li], trace.caches[li][t], dh, carry_dc[li],
                    layer_grads[li])
                carry_dh[li] = dh_prev
                if dc_prev is not None:
                    carry_dc[li] = dc_prev
                dx_above = dx
            np.add.at(demb, trace.ids[:, t], dx_above)
        return grads

    # -- copies and persistence --------------------------------------------

    def clone(self) -> "RecurrentModel":
        """Deep copy of parameters and masks; optimizer state starts fresh."""
        out = object.__new__(RecurrentModel)
        SequenceClassifier.__init__(out)
        out.kind = self.kind
        out.n_layers = self.n_layers
        out.hidden_size = self.hidden_size
        out.d_emb = self.d_emb
        out.embedding = self.embedding.copy()
        out.layers = [layer.clone() for layer in self.layers]
        out.head_W = self.head_W.copy()
        out.head_b = self.head_b.copy()
        out.masks = {name: mask.copy() for name, mask in self.masks.items()}
        return out

    def save(self, path: str | Path, header: str | None = None):
        """Write the model (and masks) as a deterministic JSON document."""
        doc = {
            "format": "sparse-rnn-model",
            "kind": self.kind.value,
            "n_layers": self.n_layers,
            "hidden_size": self.hidden_size,
            "d_emb": self.d_emb,
            "shapes": {name: list(arr.shape) for name, arr in self.iter_params()},
            "embedding": self.embedding.tolist(),
            "layers": [
                {name: arr.tolist() for name, arr in layer.params.items()}
                for layer in self.layers
            ],
            "head_W": self.head_W.tolist(),
            "head_b": self.head_b.tolist(),
            "masks": {name: mask.tolist() for name, mask in self.masks.items()},
        }
        if header is not None:
            doc["header"] = header
        Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RecurrentModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not a valid model file: {exc}") from exc
        if doc.get("format") != "sparse-rnn-model":
            raise InputError(f"{path} is not a model file")
        model = cls(doc["kind"], doc["n_layers"], doc["hidden_size"],
                    doc["d_emb"], Rng(0))
        model.embedding = np.asarray(doc["embedding"], dtype=np.float64)
        for layer, saved in zip(model.layers, doc["layers"]):
            for name in layer.params:
                layer.params[name] = np.asarray(saved[name], dtype=np.float64)
        model.head_W = np.asarray(doc["head_W"], dtype=np.float64)
        model.head_b = np.asarray(doc["head_b"], dtype=np.float64)
        model.masks = {name: np.asarray(mask, dtype=np.float64)
                       for name, mask in doc["masks"].items()}
        return model


def history_to_csv(history: list[dict], path: str | Path,
                   header_comment: str | None = None,
                   columns=("epoch", "train_loss", "test_accuracy")):
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(",".join(columns))
    for row in history:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")
