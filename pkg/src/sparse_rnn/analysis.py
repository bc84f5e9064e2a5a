"""Relating graph properties to test accuracy.

A feature table holds the 23 measured properties as columns and test
accuracy as the target.  The module computes per-property Pearson
correlations, min-max scales features into [0, 1], fits two regressors
written from first principles (closed-form ridge with the penalty
chosen by 5-fold cross-validation, and a random forest of
variance-reduction trees with bootstrap sampling and per-split feature
subsampling), reports R-squared, and repeats the forest fit on the four
property subsets used for the importance breakdown: all properties,
only the count properties, everything except the count properties, and
only the variances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError
from .metrics import RECORD_KEYS
from .numerics import Rng

COUNT_COLUMNS = ("nodes", "edges", "source_nodes", "sink_nodes")
VARIANCE_COLUMNS = tuple(k for k in RECORD_KEYS if k.endswith("_var"))
CIRCUMSTANCE_SUBSETS = {
    "all": RECORD_KEYS,
    "only_counts": COUNT_COLUMNS,
    "without_counts": tuple(k for k in RECORD_KEYS if k not in COUNT_COLUMNS),
    "only_variances": VARIANCE_COLUMNS,
}

RIDGE_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class FeatureTable:
    """Feature matrix with named columns and a real-valued target."""

    columns: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise InputError(f"matrix shape {self.X.shape} does not match "
                             f"{len(self.columns)} columns")
        if self.y.shape != (self.X.shape[0],):
            raise InputError("target length does not match row count")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def select(self, columns) -> "FeatureTable":
        idx = [self.columns.index(c) for c in columns]
        return FeatureTable(tuple(columns), self.X[:, idx], self.y)


def table_from_records(records: list[dict],
                       columns: tuple[str, ...] = RECORD_KEYS) -> FeatureTable:
    if not records:
        raise InputError("no records")
    X = np.array([[float(r[c]) for c in columns] for r in records])
    y = np.array([float(r["test_acc"]) for r in records])
    return FeatureTable(tuple(columns), X, y)


def pearson(x, y) -> float:
    """Product-moment correlation; undefined for constant inputs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError(f"need equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DomainError("correlation needs at least two points")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt((xd ** 2).sum())
    sy = np.sqrt((yd ** 2).sum())
    if sx == 0.0 or sy == 0.0:
        raise DomainError("correlation of a constant input is undefined")
    return float((xd * yd).sum() / (sx * sy))


def minmax_scale(table: FeatureTable) -> FeatureTable:
    """Map each feature column onto [0, 1]; constant columns become 0.

    The target is untouched.
    """
    X = table.X.copy()
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    constant = span == 0.0
    span[constant] = 1.0
    X = (X - lo) / span
    X[:, constant] = 0.0
    return FeatureTable(table.columns, X, table.y.copy())


def split(table: FeatureTable, rng: Rng, ratio: float = 0.9
          ) -> tuple[FeatureTable, FeatureTable]:
    """Shuffled train/test split with round(ratio * n) training rows."""
    n = table.n_rows
    if n < 10:
        raise DomainError(f"need at least 10 rows to split, got {n}")
    order = rng.permutation(n)
    n_train = int(round(ratio * n))
    tr, te = order[:n_train], order[n_train:]
    return (FeatureTable(table.columns, table.X[tr], table.y[tr]),
            FeatureTable(table.columns, table.X[te], table.y[te]))


# -- ridge ------------------------------------------------------------------

@dataclass(frozen=True)
class RidgeModel:
    columns: tuple[str, ...]
    coef: np.ndarray
    intercept: float
    lam: float

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.columns):
            raise InputError(f"{X.shape[1]} features, expected {len(self.columns)}")
        return X @ self.coef + self.intercept


def fit_ridge(train: FeatureTable, lam: float) -> RidgeModel:
    """Minimize ||Xb - y||^2 + lam ||b||^2 with an unpenalized intercept."""
    if lam < 0:
        raise DomainError(f"penalty must be non-negative, got {lam}")
    X, y = train.X, train.y
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    F = X.shape[1]
    coef = np.linalg.solve(Xc.T @ Xc + lam * np.eye(F), Xc.T @ yc)
    intercept = float(y_mean - x_mean @ coef)
    return RidgeModel(train.columns, coef, intercept, float(lam))


def cross_validate_ridge(train: FeatureTable, rng: Rng,
                         grid=RIDGE_LAMBDA_GRID, folds: int = 5) -> float:
    """Penalty from the grid with the lowest mean validation squared error."""
    n = train.n_rows
    if n < folds:
        raise DomainError(f"need at least {folds} rows, got {n}")
    order = rng.permutation(n)
    chunks = np.array_split(order, folds)
    best_lam, best_err = None, None
    for lam in grid:
        errs = []
        for f in range(folds):
            val = chunks[f]
            tr = np.concatenate([chunks[j] for j in range(folds) if j != f])
            model = fit_ridge(
                FeatureTable(train.columns, train.X[tr], train.y[tr]), lam)
            pred = model.predict(train.X[val])
            errs.append(float(((pred - train.y[val]) ** 2).mean()))
        err = float(np.mean(errs))
        if best_err is None or err < best_err:
            best_lam, best_err = lam, err
    return best_lam


# -- random forest ----------------------------------------------------------

class _TreeNode:
    __slots__ = ("feature", "thresh", "left", "right", "value")

    def __init__(self, value=None, feature=None, thresh=None,
                 left=None, right=None):
        self.value = value
        self.feature = feature
        self.thresh = thresh
        self.left = left
        self.right = right


MIN_SAMPLES_PER_LEAF = 2


def _sse(y: np.ndarray) -> float:
    return float(((y - y.mean()) ** 2).sum())


def _build_tree(X, y, depth, max_depth, rng, importances):
    node_sse = _sse(y)
    n, F = X.shape
    if depth >= max_depth or n < 2 * MIN_SAMPLES_PER_LEAF or node_sse == 0.0:
        return _TreeNode(value=float(y.mean()))
    k = max(1, int(np.sqrt(F)))
    features = rng.permutation(F)[:k]
    best = None      # (sse_after, feature, thresh, left_idx, right_idx)
    for f in features:
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sorted_v = values[order]
        for i in range(MIN_SAMPLES_PER_LEAF, n - MIN_SAMPLES_PER_LEAF + 1):
            if sorted_v[i - 1] == sorted_v[i]:
                continue
            thresh = 0.5 * (sorted_v[i - 1] + sorted_v[i])
            left = order[:i]
            right = order[i:]
            sse_after = _sse(y[left]) + _sse(y[right])
            if best is None or sse_after < best[0]:
                best = (sse_after, int(f), float(thresh), left, right)
    if best is None:
        return _TreeNode(value=float(y.mean()))
    sse_after, f, thresh, left, right = best
    importances[f] += node_sse - sse_after
    return _TreeNode(
        feature=f, thresh=thresh,
        left=_build_tree(X[left], y[left], depth + 1, max_depth, rng,
                         importances),
        right=_build_tree(X[right], y[right], depth + 1, max_depth, rng,
                          importances))


def _tree_predict(node: _TreeNode, row: np.ndarray) -> float:
    while node.value is None:
        node = node.left if row[node.feature] <= node.thresh else node.right
    return node.value


@dataclass(frozen=True)
class ForestModel:
    columns: tuple[str, ...]
    trees: tuple
    importances: np.ndarray      # per column, non-negative, sums to 1

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.columns):
            raise InputError(f"{X.shape[1]} features, expected {len(self.columns)}")
        out = np.zeros(X.shape[0])
        for tree in self.trees:
            out += np.array([_tree_predict(tree, row) for row in X])
        return out / len(self.trees)

    def importance_map(self) -> dict[str, float]:
        return {c: float(v) for c, v in zip(self.columns, self.importances)}


def fit_random_forest(train: FeatureTable, rng: Rng, n_trees: int = 100,
                      max_depth: int = 8) -> ForestModel:
    """Bootstrap-sampled variance-reduction trees, sqrt-feature splits.

    Feature importances accumulate each split's decrease in squared
    error, then normalize to sum 1 (uniform if no split ever fired).
    """
    if n_trees < 1:
        raise DomainError(f"need at least one tree, got {n_trees}")
    n, F = train.X.shape
    importances = np.zeros(F)
    trees = []
    for t in range(n_trees):
        tree_rng = rng.child(t)
        idx = tree_rng.integers(0, n, size=n)
        trees.append(_build_tree(train.X[idx], train.y[idx], 0, max_depth,
                                 tree_rng, importances))
    total = importances.sum()
    if total > 0:
        importances = importances / total
    else:
        importances = np.full(F, 1.0 / F)
    return ForestModel(train.columns, tuple(trees), importances)


# -- reporting --------------------------------------------------------------

def r_squared(pred, actual) -> float:
    """1 - SS_res / SS_tot; undefined when the actual values are constant."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise InputError("need equal-length vectors")
    if actual.size < 2:
        raise DomainError("R-squared needs at least two points")
    ss_tot = float(((actual - actual.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DomainError("R-squared against a constant target is undefined")
    ss_res = float(((actual - pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def correlation_report(table: FeatureTable) -> dict[str, float]:
    """Pearson r of each property against the target.

    Constant columns are left out rather than reported as NaN.
    """
    if table.n_rows == 0:
        raise DomainError("empty table")
    report: dict[str, float] = {}
    for j, col in enumerate(table.columns):
        column = table.X[:, j]
        if np.ptp(column) == 0.0:
            continue
        report[col] = pearson(column, table.y)
    return report


def importance_circumstances(table: FeatureTable, rng: Rng,
                             n_trees: int = 100, max_depth: int = 8,
                             ratio: float = 0.9) -> dict[str, dict]:
    """Ridge and forest fits on the four property subsets.

    One shared scaled train/test split; per subset: test R-squared for
    both regressors and the forest's importances.
    """
    if table.n_rows < 20:
        raise DomainError(f"need at least 20 rows, got {table.n_rows}")
    scaled = minmax_scale(table)
    train, test = split(scaled, rng.child(0), ratio)
    out: dict[str, dict] = {}
    for i, (name, columns) in enumerate(CIRCUMSTANCE_SUBSETS.items()):
        sub_train = train.select(columns)
        sub_test = test.select(columns)
        lam = cross_validate_ridge(sub_train, rng.child(1 + 2 * i))
        ridge = fit_ridge(sub_train, lam)
        forest = fit_random_forest(sub_train, rng.child(2 + 2 * i),
                                   n_trees=n_trees, max_depth=max_depth)
        out[name] = {
            "columns": tuple(columns),
            "r_squared": {
                "ridge": r_squared(ridge.predict(sub_test.X), sub_test.y),
                "random_forest": r_squared(forest.predict(sub_test.X),
                                           sub_test.y),
            },
            "importances": forest.importance_map(),
            "ridge_lambda": lam,
        }
    return out


# -- CSV output -------------------------------------------------------------

def correlations_to_csv(report: dict[str, float], path: str | Path,
                        header_comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["property", "pearson_r"])
        for prop in RECORD_KEYS:
            if prop in report:
                writer.writerow([prop, repr(report[prop])])


def r2_to_csv(circumstances: dict[str, dict], path: str | Path,
              header_comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["regressor", "subset", "r_squared"])
        for regressor in ("ridge", "random_forest"):
            for subset, result in circumstances.items():
                writer.writerow([regressor, subset,
                                 repr(result["r_squared"][regressor])])


def importances_to_csv(circumstance: dict, path: str | Path,
                       header_comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["property", "importance"])
        for prop in circumstance["columns"]:
            writer.writerow([prop, repr(circumstance["importances"][prop])])


def scatter_to_csv(table: FeatureTable, column: str, path: str | Path,
                   header_comment: str | None = None):
    """Two-column plot data: property value vs test accuracy."""
    j = table.columns.index(column)
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in zip(table.X[:, j], table.y):
            writer.writerow([repr(float(x)), repr(float(y))])
