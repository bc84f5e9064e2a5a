"""Reber grammar sequences: validation, generation, dataset assembly.

The grammar is the classic seven-state transition diagram over the
alphabet {B, E, P, S, T, V, X}.  A string is valid iff a walk from the
start state consumes every character and ends exactly on the accept
state.  True sequences are sampled by walking the diagram; false ones by
corrupting interior characters of a true sequence until validation
fails, which preserves the length distribution and the B...E framing.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, InputError
from .numerics import Rng

ALPHABET = "BEPSTVX"
ACCEPT = -1

# state -> {char: next_state}; ACCEPT marks a finished string.
TRANSITIONS: dict[int, dict[str, int]] = {
    0: {"B": 1},
    1: {"T": 2, "P": 3},
    2: {"S": 2, "X": 4},
    3: {"T": 3, "V": 5},
    4: {"X": 3, "S": 6},
    5: {"P": 4, "V": 6},
    6: {"E": ACCEPT},
}

# Consecutive repeats allowed on the two self-loops (S at state 2, T at
# state 3) before the walk is forced to leave the loop.
MAX_SELF_LOOP = 20

DEFAULT_MIN_LEN = 11


@dataclass(frozen=True)
class LabeledSequence:
    text: str
    label: int  # 1 = valid Reber string, 0 = invalid


@dataclass
class Dataset:
    train: list[LabeledSequence]
    test: list[LabeledSequence]
    seed: int
    min_len: int = DEFAULT_MIN_LEN

    def class_counts(self, split: str) -> dict[int, int]:
        seqs = self.train if split == "train" else self.test
        counts = Counter(s.label for s in seqs)
        return {0: counts.get(0, 0), 1: counts.get(1, 0)}


def validate(text: str) -> bool:
    """True iff ``text`` is a complete walk of the transition diagram."""
    state = 0
    for ch in text:
        if state == ACCEPT:
            return False  # characters after E
        nxt = TRANSITIONS[state].get(ch)
        if nxt is None:
            return False
        state = nxt
    return state == ACCEPT


def generate_true(rng: Rng, min_len: int = DEFAULT_MIN_LEN) -> str:
    """Sample a valid sequence of length >= min_len (rejection sampling)."""
    if min_len < 5:
        raise DomainError(f"min_len must be >= 5, got {min_len}")
    while True:
        s = _walk(rng)
        if len(s) >= min_len:
            return s


def _walk(rng: Rng) -> str:
    state = 0
    out: list[str] = []
    loop_run = 0
    while state != ACCEPT:
        choices = sorted(TRANSITIONS[state].items())
        if len(choices) == 1:
            ch, nxt = choices[0]
        else:
            ch, nxt = choices[int(rng.integers(0, len(choices)))]
            if nxt == state:
                loop_run += 1
                if loop_run >= MAX_SELF_LOOP:
                    # take the non-loop branch instead
                    ch, nxt = next(c for c in choices if c[1] != state)
                    loop_run = 0
            else:
                loop_run = 0
        out.append(ch)
        state = nxt
    return "".join(out)


def generate_false(rng: Rng, min_len: int = DEFAULT_MIN_LEN) -> str:
    """Corrupt a true sequence until it no longer validates.

    Substitutes 1-3 interior positions with uniform A-Z characters, so
    the result keeps its leading B, trailing E, and overall length.
    """
    base = generate_true(rng, min_len)
    chars = list(base)
    while True:
        corrupted = chars.copy()
        k = int(rng.integers(1, 4))
        positions = 1 + rng.permutation(len(chars) - 2)[:k]
        for pos in positions:
            corrupted[int(pos)] = chr(ord("A") + int(rng.integers(0, 26)))
        text = "".join(corrupted)
        if not validate(text):
            return text


def build_dataset(n_total: int, rng: Rng, min_len: int = DEFAULT_MIN_LEN) -> Dataset:
    """n_total/2 true + n_total/2 false sequences, shuffled, split 75/25."""
    if n_total < 2 or n_total % 2 != 0:
        raise DomainError(f"n_total must be even and >= 2, got {n_total}")
    half = n_total // 2
    pool = [LabeledSequence(generate_true(rng, min_len), 1) for _ in range(half)]
    pool += [LabeledSequence(generate_false(rng, min_len), 0) for _ in range(half)]
    order = rng.permutation(n_total)
    pool = [pool[int(i)] for i in order]
    n_train = (3 * n_total) // 4
    return Dataset(train=pool[:n_train], test=pool[n_train:],
                   seed=rng.seed, min_len=min_len)


def length_histogram(seqs: list[LabeledSequence]) -> dict[int, int]:
    return dict(Counter(len(s.text) for s in seqs))


# ---------------------------------------------------------------------------
# Persistence: <name>.train.csv / <name>.test.csv / <name>.meta.json

def _write_split(path: Path, seqs: list[LabeledSequence], header_comment: str | None):
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("label,sequence")
    lines.extend(f"{s.label},{s.text}" for s in seqs)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_split(path: Path) -> list[LabeledSequence]:
    seqs = []
    lines = path.read_text(encoding="utf-8").splitlines()
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != "label,sequence":
        raise InputError(f"{path}: missing 'label,sequence' header")
    for ln in lines[1:]:
        label, text = ln.split(",", 1)
        if label not in ("0", "1"):
            raise InputError(f"{path}: bad label {label!r}")
        seqs.append(LabeledSequence(text, int(label)))
    return seqs


def dataset_paths(base: str | Path) -> tuple[Path, Path, Path]:
    base = Path(base)
    return (base.with_name(base.name + ".train.csv"),
            base.with_name(base.name + ".test.csv"),
            base.with_name(base.name + ".meta.json"))


def save_dataset(ds: Dataset, base: str | Path, header_comment: str | None = None):
    train_path, test_path, meta_path = dataset_paths(base)
    train_path.parent.mkdir(parents=True, exist_ok=True)
    _write_split(train_path, ds.train, header_comment)
    _write_split(test_path, ds.test, header_comment)
    meta = {
        "seed": ds.seed,
        "n_total": len(ds.train) + len(ds.test),
        "min_len": ds.min_len,
        "counts": {split: ds.class_counts(split) for split in ("train", "test")},
    }
    if header_comment:
        meta["header"] = header_comment
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")


def load_dataset(base: str | Path) -> Dataset:
    train_path, test_path, meta_path = dataset_paths(base)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return Dataset(train=_read_split(train_path), test=_read_split(test_path),
                   seed=meta["seed"], min_len=meta["min_len"])
