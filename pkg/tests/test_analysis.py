"""Correlation, scaling, splitting, ridge and forest regression.

Hand-sized vectors pin the correlation and R-squared conventions; the
regressors are checked on synthetic tables with known structure: exact
linear recovery for ridge, positive held-out R-squared and dominant
informative features for the forest.
"""

import numpy as np
import pytest

from sparse_rnn.analysis import (CIRCUMSTANCE_SUBSETS, COUNT_COLUMNS,
                                 RIDGE_LAMBDA_GRID, FeatureTable,
                                 correlation_report, correlations_to_csv,
                                 cross_validate_ridge, fit_random_forest,
                                 fit_ridge, importance_circumstances,
                                 importances_to_csv, minmax_scale, pearson,
                                 r2_to_csv, r_squared, scatter_to_csv, split,
                                 table_from_records)
from sparse_rnn.errors import DomainError, InputError
from sparse_rnn.metrics import RECORD_KEYS
from sparse_rnn.numerics import Rng


def synthetic_records(n: int, rng: Rng, noise: float = 0.02) -> list[dict]:
    """Records whose accuracy rises monotonically with the node count."""
    records = []
    for _ in range(n):
        record = {k: rng.random() for k in RECORD_KEYS}
        record["nodes"] = float(rng.integers(10, 51))
        record["test_acc"] = (record["nodes"] / 50.0
                              + noise * rng.uniform(-1.0, 1.0))
        records.append(record)
    return records


class TestPearson:
    def test_reference_value(self):
        assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_perfect_correlation(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)

    def test_shift_and_scale_invariance(self):
        x = [0.3, 1.7, 2.9, 4.1]
        y = [5.0, 2.0, 8.0, 1.0]
        base = pearson(x, y)
        assert pearson([3 * v + 7 for v in x], y) == pytest.approx(base)

    def test_bad_inputs(self):
        with pytest.raises(InputError):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(DomainError):
            pearson([1], [2])


class TestRSquared:
    def test_reference_value(self):
        assert r_squared([1, 2], [1, 3]) == pytest.approx(0.5)

    def test_perfect_prediction(self):
        assert r_squared([1.5, 2.5, 3.5], [1.5, 2.5, 3.5]) == 1.0

    def test_mean_prediction_scores_zero(self):
        assert r_squared([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == 0.0

    def test_constant_target_rejected(self):
        with pytest.raises(DomainError):
            r_squared([1.0, 2.0], [3.0, 3.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InputError):
            r_squared([1.0], [1.0, 2.0])


class TestFeatureTable:
    def test_shape_validation(self):
        with pytest.raises(InputError):
            FeatureTable(("a",), np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(InputError):
            FeatureTable(("a", "b"), np.zeros((3, 2)), np.zeros(4))

    def test_select_reorders_columns(self):
        table = FeatureTable(("a", "b", "c"),
                             np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
                             np.array([0.1, 0.2]))
        sub = table.select(("c", "a"))
        assert sub.columns == ("c", "a")
        assert np.array_equal(sub.X, [[3.0, 1.0], [6.0, 4.0]])
        assert np.array_equal(sub.y, table.y)

    def test_table_from_records(self):
        records = synthetic_records(5, Rng(0))
        table = table_from_records(records)
        assert table.columns == RECORD_KEYS
        assert table.X.shape == (5, 23)
        assert list(table.y) == [r["test_acc"] for r in records]
        with pytest.raises(InputError):
            table_from_records([])


class TestScaling:
    def test_columns_land_in_unit_interval(self):
        table = FeatureTable(("a", "b"),
                             np.array([[10.0, 5.0], [20.0, 9.0], [15.0, 7.0]]),
                             np.array([1.0, 2.0, 3.0]))
        scaled = minmax_scale(table)
        assert np.array_equal(scaled.X[:, 0], [0.0, 1.0, 0.5])
        assert np.array_equal(scaled.X[:, 1], [0.0, 1.0, 0.5])
        assert np.array_equal(scaled.y, table.y)
        assert table.X[0, 0] == 10.0

    def test_constant_column_maps_to_zero(self):
        table = FeatureTable(("a", "b"),
                             np.array([[4.0, 1.0], [4.0, 2.0]]),
                             np.array([0.0, 1.0]))
        scaled = minmax_scale(table)
        assert np.array_equal(scaled.X[:, 0], [0.0, 0.0])


class TestSplit:
    def test_sizes_follow_ratio(self):
        table = FeatureTable(("a",), np.arange(40.0).reshape(40, 1),
                             np.arange(40.0))
        train, test = split(table, Rng(1))
        assert train.n_rows == 36
        assert test.n_rows == 4

    def test_rows_are_partitioned(self):
        table = FeatureTable(("a",), np.arange(30.0).reshape(30, 1),
                             np.arange(30.0))
        train, test = split(table, Rng(2))
        seen = sorted(train.X[:, 0]) + sorted(test.X[:, 0])
        assert sorted(seen) == list(np.arange(30.0))

    def test_deterministic_in_seed(self):
        table = FeatureTable(("a",), np.arange(20.0).reshape(20, 1),
                             np.arange(20.0))
        a, _ = split(table, Rng(3))
        b, _ = split(table, Rng(3))
        assert np.array_equal(a.X, b.X)

    def test_too_few_rows_rejected(self):
        table = FeatureTable(("a",), np.arange(9.0).reshape(9, 1),
                             np.arange(9.0))
        with pytest.raises(DomainError):
            split(table, Rng(0))


class TestRidge:
    def linear_table(self, n=50, seed=4):
        rng = Rng(seed)
        X = rng.uniform(-1.0, 1.0, (n, 2))
        y = 2.0 * X[:, 0] - 3.0 * X[:, 1] + 5.0
        return FeatureTable(("a", "b"), X, y)

    def test_recovers_exact_linear_rule(self):
        model = fit_ridge(self.linear_table(), lam=0.0)
        assert model.coef == pytest.approx([2.0, -3.0])
        assert model.intercept == pytest.approx(5.0)
        table = self.linear_table(seed=9)
        assert r_squared(model.predict(table.X), table.y) == pytest.approx(1.0)

    def test_large_penalty_shrinks_coefficients(self):
        table = self.linear_table()
        free = fit_ridge(table, lam=0.0)
        tight = fit_ridge(table, lam=1e6)
        assert np.abs(tight.coef).sum() < 0.01 * np.abs(free.coef).sum()

    def test_negative_penalty_rejected(self):
        with pytest.raises(DomainError):
            fit_ridge(self.linear_table(), lam=-1.0)

    def test_predict_checks_feature_count(self):
        model = fit_ridge(self.linear_table(), lam=0.1)
        with pytest.raises(InputError):
            model.predict(np.zeros((3, 5)))

    def test_cross_validation_picks_from_grid(self):
        lam = cross_validate_ridge(self.linear_table(), Rng(5))
        assert lam in RIDGE_LAMBDA_GRID
        with pytest.raises(DomainError):
            cross_validate_ridge(
                FeatureTable(("a",), np.zeros((3, 1)), np.zeros(3)), Rng(0))


class TestRandomForest:
    def test_positive_r_squared_on_monotone_data(self):
        rng = Rng(6)
        X = rng.uniform(0.0, 1.0, (60, 1))
        y = X[:, 0] + 0.05 * rng.uniform(-1.0, 1.0, (60,))
        table = FeatureTable(("x",), X, y)
        train, test = split(table, rng.child(0))
        forest = fit_random_forest(train, rng.child(1))
        assert r_squared(forest.predict(test.X), test.y) > 0.0

    def test_importances_are_a_distribution(self):
        rng = Rng(7)
        X = rng.uniform(0.0, 1.0, (40, 4))
        y = X[:, 1] * 2.0
        table = FeatureTable(("a", "b", "c", "d"), X, y)
        forest = fit_random_forest(table, rng.child(0), n_trees=30)
        assert forest.importances.shape == (4,)
        assert np.all(forest.importances >= 0.0)
        assert forest.importances.sum() == pytest.approx(1.0)

    def test_informative_feature_dominates(self):
        rng = Rng(8)
        X = rng.uniform(0.0, 1.0, (80, 4))
        y = 3.0 * X[:, 2] + 0.05 * rng.uniform(-1.0, 1.0, (80,))
        table = FeatureTable(("a", "b", "c", "d"), X, y)
        forest = fit_random_forest(table, rng.child(0))
        assert forest.importances[2] > 2 * max(
            forest.importances[j] for j in (0, 1, 3))

    def test_deterministic_in_seed(self):
        rng_data = Rng(9)
        X = rng_data.uniform(0.0, 1.0, (30, 2))
        y = X[:, 0] - X[:, 1]
        table = FeatureTable(("a", "b"), X, y)
        a = fit_random_forest(table, Rng(10), n_trees=10)
        b = fit_random_forest(table, Rng(10), n_trees=10)
        assert np.array_equal(a.predict(X), b.predict(X))
        assert np.array_equal(a.importances, b.importances)

    def test_preconditions(self):
        table = FeatureTable(("a",), np.zeros((5, 1)), np.zeros(5))
        with pytest.raises(DomainError):
            fit_random_forest(table, Rng(0), n_trees=0)
        forest = fit_random_forest(
            FeatureTable(("a",), np.arange(8.0).reshape(8, 1),
                         np.arange(8.0)), Rng(0), n_trees=3)
        with pytest.raises(InputError):
            forest.predict(np.zeros((2, 3)))


class TestCircumstanceSubsets:
    def test_exact_column_sets(self):
        assert set(CIRCUMSTANCE_SUBSETS) == {
            "all", "only_counts", "without_counts", "only_variances"}
        assert CIRCUMSTANCE_SUBSETS["all"] == RECORD_KEYS
        assert len(CIRCUMSTANCE_SUBSETS["all"]) == 23
        assert CIRCUMSTANCE_SUBSETS["only_counts"] == (
            "nodes", "edges", "source_nodes", "sink_nodes")
        without = CIRCUMSTANCE_SUBSETS["without_counts"]
        assert len(without) == 19
        assert "layers" in without
        assert not set(COUNT_COLUMNS) & set(without)
        variances = CIRCUMSTANCE_SUBSETS["only_variances"]
        assert len(variances) == 5
        assert all(c.endswith("_var") for c in variances)

    def test_subsets_preserve_record_key_order(self):
        for columns in CIRCUMSTANCE_SUBSETS.values():
            positions = [RECORD_KEYS.index(c) for c in columns]
            assert positions == sorted(positions)


class TestCorrelationReport:
    def test_matches_pearson_per_column(self):
        table = table_from_records(synthetic_records(30, Rng(11)))
        report = correlation_report(table)
        assert report["nodes"] == pearson(
            table.X[:, RECORD_KEYS.index("nodes")], table.y)
        assert report["nodes"] > 0.5

    def test_constant_columns_are_left_out(self):
        records = synthetic_records(15, Rng(12))
        for record in records:
            record["sink_nodes"] = 1.0
        report = correlation_report(table_from_records(records))
        assert "sink_nodes" not in report
        assert "nodes" in report

    def test_empty_table_rejected(self):
        table = FeatureTable(("a",), np.zeros((0, 1)), np.zeros(0))
        with pytest.raises(DomainError):
            correlation_report(table)


class TestImportanceCircumstances:
    def test_result_structure(self):
        table = table_from_records(synthetic_records(40, Rng(13)))
        result = importance_circumstances(table, Rng(14), n_trees=30)
        assert set(result) == set(CIRCUMSTANCE_SUBSETS)
        for subset, entry in result.items():
            assert entry["columns"] == CIRCUMSTANCE_SUBSETS[subset]
            assert set(entry["r_squared"]) == {"ridge", "random_forest"}
            assert entry["ridge_lambda"] in RIDGE_LAMBDA_GRID
            importances = entry["importances"]
            assert set(importances) == set(entry["columns"])
            assert all(v >= 0.0 for v in importances.values())
            assert sum(importances.values()) == pytest.approx(1.0)

    def test_forest_generalizes_on_monotone_corpus(self):
        table = table_from_records(synthetic_records(40, Rng(15)))
        result = importance_circumstances(table, Rng(16), n_trees=50)
        assert result["all"]["r_squared"]["random_forest"] > 0.0
        assert result["only_counts"]["r_squared"]["ridge"] > 0.0

    def test_too_few_rows_rejected(self):
        table = table_from_records(synthetic_records(19, Rng(17)))
        with pytest.raises(DomainError):
            importance_circumstances(table, Rng(0))


class TestCsvWriters:
    def test_correlations_csv(self, tmp_path):
        table = table_from_records(synthetic_records(20, Rng(18)))
        report = correlation_report(table)
        path = tmp_path / "correlations.csv"
        correlations_to_csv(report, path, header_comment="v1 config=abc")
        lines = path.read_text().splitlines()
        assert lines[0] == "# v1 config=abc"
        assert lines[1] == "property,pearson_r"
        names = [line.split(",")[0] for line in lines[2:]]
        assert names == [k for k in RECORD_KEYS if k in report]
        value = float(lines[2].split(",")[1])
        assert value == report[names[0]]

    def test_r2_csv(self, tmp_path):
        table = table_from_records(synthetic_records(40, Rng(19)))
        result = importance_circumstances(table, Rng(20), n_trees=10)
        path = tmp_path / "r2.csv"
        r2_to_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "regressor,subset,r_squared"
        assert len(lines) == 1 + 2 * len(CIRCUMSTANCE_SUBSETS)
        assert lines[1].startswith("ridge,all,")

    def test_importances_csv(self, tmp_path):
        table = table_from_records(synthetic_records(40, Rng(21)))
        result = importance_circumstances(table, Rng(22), n_trees=10)
        path = tmp_path / "importances.csv"
        importances_to_csv(result["only_counts"], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "property,importance"
        assert [line.split(",")[0] for line in lines[1:]] == list(
            CIRCUMSTANCE_SUBSETS["only_counts"])

    def test_scatter_csv(self, tmp_path):
        table = table_from_records(synthetic_records(10, Rng(23)))
        path = tmp_path / "scatter.csv"
        scatter_to_csv(table, "nodes", path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y"
        xs = [float(line.split(",")[0]) for line in lines[1:]]
        assert xs == list(table.X[:, RECORD_KEYS.index("nodes")])
