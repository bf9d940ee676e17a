import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import at
from tarmac.errors import ConfigError
from tarmac.evaluate import (
    DEFAULT_COMBOS,
    learning_curve,
    permutation_importance,
    rmse,
    run_grid,
    time_split,
)
from tarmac.featurize import FeatureMatrix
from tarmac.model import ModelSpec, fit_linear


class TestRmse:
    def test_perfect_prediction(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_arithmetic(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5), abs=1e-12)

    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=20),
        st.floats(-10, 10),
    )
    @settings(deadline=None, max_examples=50)
    def test_residual_scaling_homogeneity(self, resid, c):
        y = np.zeros(len(resid))
        r = np.asarray(resid)
        assert rmse(y, c * r) == pytest.approx(abs(c) * rmse(y, r), rel=1e-9, abs=1e-9)

    def test_errors(self):
        with pytest.raises(ConfigError):
            rmse([1.0], [1.0, 2.0])
        with pytest.raises(ConfigError):
            rmse([], [])


def _times(day_counts):
    """predicting_times spread over consecutive days; day_counts[i] rows on day i.
    40-minute spacing keeps up to 36 rows inside one calendar day."""
    out = []
    for d, n in enumerate(day_counts):
        for k in range(n):
            out.append(at(d * 24 * 60.0 + 40.0 * k))
    return out


class TestTimeSplit:
    def test_eighty_twenty_over_ten_days(self):
        times = _times([3] * 10)
        train, test = time_split(times, 0.8)
        train_days = {times[i].date() for i in train}
        test_days = {times[i].date() for i in test}
        assert len(train_days) == 8 and len(test_days) == 2
        assert not (train_days & test_days)

    def test_strict_chronology(self):
        times = _times([2, 2, 2, 2, 2])
        train, test = time_split(times, 0.6)
        assert max(times[i] for i in train) < min(times[i] for i in test)

    def test_ceiling_rule_on_three_days(self):
        times = _times([1, 1, 1])
        train, test = time_split(times, 0.5)
        assert len({times[i].date() for i in train}) == 2

    def test_too_few_days(self):
        with pytest.raises(ConfigError, match="2 distinct days"):
            time_split(_times([5]), 0.5)

    def test_fraction_leaving_no_test_days(self):
        with pytest.raises(ConfigError, match="no test days"):
            time_split(_times([1, 1, 1]), 0.9)

    def test_fraction_range_validated(self):
        with pytest.raises(ConfigError):
            time_split(_times([1, 1]), 1.0)


def _toy_matrix(n_days=6, per_day=30, seed=0):
    """HIST/ATC-tagged toy matrix with a planted linear effect on one column."""
    rng = np.random.default_rng(seed)
    n = n_days * per_day
    congestion = rng.integers(0, 10, n).astype(float)
    noise_col = rng.normal(size=n)
    inbound = rng.normal(size=n)
    y = 2.0 * congestion + 0.5 * inbound + rng.normal(0, 0.3, n)
    times = _times([per_day] * n_days)
    return FeatureMatrix(
        columns=["hist_inbound", "hist_noise", "atc_congestion"],
        groups=["HIST", "HIST", "ATC"],
        X=np.column_stack([inbound, noise_col, congestion]),
        y=y,
        flight_ids=[f"F{i}" for i in range(n)],
        dates=[t.date() for t in times],
        predicting_times=times,
    )


class TestRunGrid:
    def test_four_by_four_grid(self):
        fm = _toy_matrix()
        specs = [
            ModelSpec("linear"),
            ModelSpec("svr_linear", {"epochs": 20}),
            ModelSpec("mlp", {"epochs": 20}),
            ModelSpec("gbdt", {"n_trees": 10, "min_leaf": 5}),
        ]
        results = run_grid(fm, specs, combos=DEFAULT_COMBOS, train_fraction=0.8)
        assert len(results) == 16
        assert all(r.error is None for r in results)
        assert all(r.rmse_test >= 0 for r in results)

    def test_same_seed_reproduces_table(self):
        fm = _toy_matrix()
        specs = [ModelSpec("gbdt", {"n_trees": 5, "min_leaf": 5}, seed=3)]
        a = run_grid(fm, specs, train_fraction=0.8)
        b = run_grid(fm, specs, train_fraction=0.8)
        assert [(r.rmse_train, r.rmse_test) for r in a] == [
            (r.rmse_train, r.rmse_test) for r in b
        ]

    def test_cells_are_independent(self):
        fm = _toy_matrix()
        specs = [ModelSpec("linear"), ModelSpec("gbdt", {"n_trees": 5, "min_leaf": 5})]
        full = run_grid(fm, specs, combos=DEFAULT_COMBOS, train_fraction=0.8)
        reduced = run_grid(fm, [specs[1]], combos=DEFAULT_COMBOS[1:], train_fraction=0.8)
        lookup = {(r.family, r.combo): (r.rmse_train, r.rmse_test) for r in full}
        for r in reduced:
            assert lookup[(r.family, r.combo)] == (r.rmse_train, r.rmse_test)

    def test_cell_failure_recorded_not_raised(self):
        fm = _toy_matrix()
        # min_leaf larger than the training partition forces a cell error
        specs = [ModelSpec("gbdt", {"min_leaf": 100000})]
        results = run_grid(fm, specs, combos=[("HIST",)], train_fraction=0.8)
        assert len(results) == 1
        assert results[0].error is not None and results[0].rmse_test is None

    def test_threaded_equals_sequential(self):
        fm = _toy_matrix()
        specs = [ModelSpec("linear"), ModelSpec("gbdt", {"n_trees": 5, "min_leaf": 5})]
        seq = run_grid(fm, specs, train_fraction=0.8, threads=1)
        par = run_grid(fm, specs, train_fraction=0.8, threads=4)
        assert [(r.family, r.combo, r.rmse_test) for r in seq] == [
            (r.family, r.combo, r.rmse_test) for r in par
        ]


class TestLearningCurve:
    def test_grows_one_day_at_a_time_against_fixed_test(self):
        fm = _toy_matrix(n_days=6, per_day=30)
        rows = learning_curve(fm, ModelSpec("linear"), train_fraction=0.8)
        # 6 days at 0.8 -> 5 train days; curve runs from 2 to 5 days
        assert [r["train_days"] for r in rows] == [2, 3, 4, 5]
        assert [r["n_train"] for r in rows] == [60, 90, 120, 150]
        assert all(r["rmse_test"] >= 0 for r in rows)

    def test_min_train_days_validated(self):
        fm = _toy_matrix(n_days=6, per_day=10)
        with pytest.raises(ConfigError):
            learning_curve(fm, ModelSpec("linear"), min_train_days=50)


class TestPermutationImportance:
    def test_single_row_gives_zero_delta(self):
        X = np.array([[1.0, 2.0]])
        m = fit_linear(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([0.0, 2.0]), ["a", "b"])
        rep = permutation_importance(m, X, ["a", "b"], np.array([3.0]), repeats=3, seed=0)
        assert all(ci.delta_rmse == 0.0 for ci in rep.columns)

    def test_independent_column_has_negligible_importance(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(300, 2))
        y = 3.0 * X[:, 0] + rng.normal(0, 0.2, 300)
        m = fit_linear(X, y, ["signal", "inert"])
        rep = permutation_importance(m, X, ["signal", "inert"], y, repeats=20, seed=1)
        by_name = {ci.column: ci.delta_rmse for ci in rep.columns}
        assert abs(by_name["inert"]) < 0.5
        assert by_name["signal"] > 1.0

    def test_group_aggregation_sums_members_exactly(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 3))
        y = X @ np.array([1.0, 2.0, 0.0]) + rng.normal(0, 0.1, 50)
        m = fit_linear(X, y, list("abc"))
        rep = permutation_importance(
            m, X, list("abc"), y, repeats=5, seed=2, groups=["G1", "G1", "G2"]
        )
        by_group = rep.by_group()
        assert by_group["G1"] == rep.columns[0].delta_rmse + rep.columns[1].delta_rmse
        assert by_group["G2"] == rep.columns[2].delta_rmse

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 2))
        y = X[:, 0] + rng.normal(0, 0.1, 40)
        m = fit_linear(X, y, ["a", "b"])
        a = permutation_importance(m, X, ["a", "b"], y, repeats=4, seed=9)
        b = permutation_importance(m, X, ["a", "b"], y, repeats=4, seed=9)
        assert [c.delta_rmse for c in a.columns] == [c.delta_rmse for c in b.columns]
