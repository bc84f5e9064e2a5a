"""Small numeric layer shared by every other module.

Matrices are plain 2-D float64 numpy arrays; the helpers here add the
shape/domain checking the rest of the code relies on.  Randomness goes
through :class:`Rng`, a thin wrapper around numpy's PCG64 generator, so
every experiment is replayable from a single integer seed.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

Matrix = np.ndarray


def as_matrix(data) -> Matrix:
    """Coerce nested lists (or an array) to a 2-D float64 matrix."""
    try:
        m = np.asarray(data, dtype=np.float64)
    except ValueError as exc:
        raise ShapeError(f"not a rectangular matrix: {exc}") from exc
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def check_finite(m: Matrix, what: str = "matrix") -> Matrix:
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{what} contains non-finite entries")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with an explicit error naming both shapes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def elementwise_mul(a: Matrix, b: Matrix) -> Matrix:
    """Hadamard product of two identically shaped matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def percentile(values, p: float) -> float:
    """Linear-interpolation percentile of ``values``.

    Sorts ascending and interpolates between the order statistics at
    index p/100 * (n-1), matching numpy's default behaviour.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise DomainError("percentile of an empty list is undefined")
    if not 0.0 <= p <= 100.0:
        raise DomainError(f"percentile p={p} outside [0, 100]")
    return float(np.percentile(values, p))


def stats(values) -> tuple[float, float, float]:
    """(mean, population variance, population std) of a non-empty list."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise DomainError("stats of an empty list are undefined")
    mean = float(np.mean(values))
    var = float(np.var(values))
    return mean, var, float(np.sqrt(var))


class Rng:
    """Deterministic random source (numpy PCG64).

    The same seed yields the same draw sequence on every platform.  Use
    :meth:`child` to derive independent sub-streams for parallel work
    without coupling their draw order.
    """

    def __init__(self, seed: int, _ss: np.random.SeedSequence | None = None):
        self.seed = int(seed)
        self._ss = np.random.SeedSequence(self.seed) if _ss is None else _ss
        self._gen = np.random.Generator(np.random.PCG64(self._ss))

    def child(self, index: int) -> "Rng":
        """Independent sub-stream; stable in ``index`` and the parent seed."""
        ss = np.random.SeedSequence(entropy=self._ss.entropy,
                                    spawn_key=self._ss.spawn_key + (int(index),))
        return Rng(self.seed, _ss=ss)

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in [low, high)."""
        return self._gen.integers(low, high, size=size)

    def shuffle(self, x) -> None:
        self._gen.shuffle(x)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def choice_weighted(self, n: int, weights) -> int:
        """Index in [0, n) drawn with probability proportional to weights."""
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise DomainError("weights must have positive sum")
        return int(self._gen.choice(n, p=w / total))
