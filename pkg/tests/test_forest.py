import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from brsf.dataset import Dataset, FeatureMeta, load_example
from brsf.forest import (RandomSurvivalForest, best_split, grow_forest, grow_tree,
                         impute_adaptive, load_forest, log_rank_statistic, node_chf,
                         oob_ensemble_chf, save_forest)
from brsf.forest.persistence import ModelFormatError, forest_from_dict, forest_to_dict
from brsf.forest.tree import TerminalNode
from oracles import brute_force_best, nelson_aalen, random_survival_data, textbook_logrank


@pytest.fixture(scope="module")
def veteran():
    return load_example("veteran")


@pytest.fixture(scope="module")
def small_forest(veteran):
    return grow_forest(veteran, n_estimators=30, seed=3)


class TestLogRank:
    @given(st.integers(0, 2**32 - 1), st.integers(4, 40))
    @settings(max_examples=60, deadline=None)
    def test_matches_textbook(self, seed, n):
        rng = np.random.default_rng(seed)
        _, time, status = random_survival_data(rng, n, 1)
        status[0] = 1
        left = rng.uniform(size=n) < 0.5
        left[0], left[-1] = True, False
        np.testing.assert_allclose(log_rank_statistic(time, status, left),
                                   textbook_logrank(time, status, left), atol=1e-10)

    def test_sign_more_deaths_on_left_is_positive(self):
        time = np.array([1.0, 2, 3, 4, 5, 6])
        status = np.ones(6, int)
        assert log_rank_statistic(time, status, time <= 3) > 0

    def test_bootstrap_duplicates_count(self):
        time = np.array([1.0, 2.0, 3.0, 4.0])
        status = np.array([1, 1, 0, 1])
        left = np.array([True, False, True, False])
        dup = np.repeat(np.arange(4), [2, 1, 1, 1])
        np.testing.assert_allclose(log_rank_statistic(time[dup], status[dup], left[dup]),
                                   textbook_logrank(time[dup], status[dup], left[dup]))

    def test_zero_variance_is_zero(self):
        # one subject at risk at the only death time
        assert log_rank_statistic([1.0, 2.0], [0, 1], [True, False]) == 0.0

    @pytest.mark.parametrize("left", [[False, False], [True, True]])
    def test_empty_side(self, left):
        with pytest.raises(ValueError, match="empty side"):
            log_rank_statistic([1.0, 2.0], [1, 1], left)

    def test_no_deaths(self):
        with pytest.raises(ValueError, match="no deaths"):
            log_rank_statistic([1.0, 2.0], [0, 0], [True, False])


class TestBestSplit:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 50))
        p = int(rng.integers(1, 5))
        X, time, status = random_survival_data(rng, n, p)
        X = np.round(X, 1)
        d0 = int(rng.integers(1, 4))
        feats = rng.permutation(p)[: int(rng.integers(1, p + 1))]
        rule = best_split(X, time, status, feats, min_deaths=d0)
        oracle = brute_force_best(X, time, status, list(feats), d0)
        if oracle is None:
            assert rule is None
            return
        assert rule is not None
        np.testing.assert_allclose(abs(rule.statistic), abs(oracle[2]), rtol=1e-10)
        assert (rule.feature, rule.threshold) == (oracle[0], pytest.approx(oracle[1]))

    def test_categorical_one_level_left(self):
        rng = np.random.default_rng(0)
        g = np.repeat([0.0, 1.0, 2.0], 10)
        time = np.where(g == 1, rng.uniform(1, 2, 30), rng.uniform(5, 9, 30))
        status = np.ones(30, int)
        rule = best_split(g[:, None], time, status, [0], min_deaths=3, categorical=[True])
        assert rule.categorical and rule.threshold == 1.0
        oracle = brute_force_best(g[:, None], time, status, [0], 3, categorical=(0,))
        np.testing.assert_allclose(rule.statistic, oracle[2], rtol=1e-10)

    def test_duplicate_columns_first_wins(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=30)
        X = np.column_stack([x, x])
        time = np.exp(x) + rng.uniform(0, 0.1, 30)
        status = np.ones(30, int)
        assert best_split(X, time, status, [1, 0]).feature == 1
        assert best_split(X, time, status, [0, 1]).feature == 0

    def test_too_few_deaths(self):
        X = np.arange(10.0)[:, None]
        status = np.zeros(10, int)
        status[:5] = 1
        assert best_split(X, np.arange(1.0, 11), status, [0], min_deaths=3) is None

    def test_admissibility(self):
        rng = np.random.default_rng(2)
        X, time, status = random_survival_data(rng, 40, 3, ties=False)
        rule = best_split(X, time, status, [0, 1, 2], min_deaths=4)
        left = rule.goes_left(X[:, rule.feature])
        for side in (left, ~left):
            assert np.unique(time[side & (status == 1)]).size >= 4


class TestTree:
    def test_node_chf_is_nelson_aalen(self):
        rng = np.random.default_rng(1)
        _, time, status = random_survival_data(rng, 25, 1)
        chf = node_chf(time, status)
        for t in np.linspace(0, time.max() + 1, 17):
            assert chf(t) == pytest.approx(nelson_aalen(time, status, t), abs=1e-12)

    def test_leaves_respect_min_deaths(self, veteran):
        in_bag = np.arange(veteran.n_records)
        tree, _ = grow_tree(veteran.X, veteran.time, veteran.status, in_bag, max_features=3,
                            min_deaths=3, categorical=veteran.categorical_mask,
                            rng=np.random.default_rng(0))
        leaves = tree.apply(veteran.X)
        for leaf in np.unique(leaves):
            members = leaves == leaf
            assert np.unique(veteran.time[members & (veteran.status == 1)]).size >= 3

    def test_single_leaf_when_unsplittable(self):
        X = np.arange(6.0)[:, None]
        tree, _ = grow_tree(X, np.arange(1.0, 7), np.ones(6, int), np.arange(6),
                            max_features=1, min_deaths=4, rng=np.random.default_rng(0))
        assert isinstance(tree.root, TerminalNode)
        assert tree.height == 0 and tree.n_leaves == 1


class TestForest:
    def test_shapes_and_monotone(self, small_forest, veteran):
        H = small_forest.predict_cumulative_hazard(veteran.X[:10])
        assert H.shape == (10, small_forest.event_times_.size)
        assert np.all(np.diff(H, axis=1) >= -1e-12)
        S = small_forest.predict_survival(veteran.X[:10])
        assert np.all((S >= 0) & (S <= 1))
        np.testing.assert_allclose(small_forest.predict(veteran.X[:10]), H.sum(axis=1))

    def test_n_jobs_does_not_change_result(self, veteran):
        a = grow_forest(veteran, 12, seed=7, n_jobs=1)
        b = grow_forest(veteran, 12, seed=7, n_jobs=4)
        np.testing.assert_array_equal(a.in_bag_, b.in_bag_)
        np.testing.assert_array_equal(a.predict(veteran.X), b.predict(veteran.X))

    def test_oob_chf_averages_oob_trees(self, small_forest, veteran):
        i = 4
        manual = []
        for b, tree in enumerate(small_forest.trees_):
            if small_forest.in_bag_[b, i] == 0:
                manual.append(tree.chf(veteran.X[i])(small_forest.event_times_))
        chf = oob_ensemble_chf(small_forest, i)
        np.testing.assert_allclose(chf(small_forest.event_times_), np.mean(manual, axis=0))

    def test_oob_none_when_always_in_bag(self, veteran):
        forest = grow_forest(veteran.subset(np.arange(40)), 1, seed=0)
        inside = np.flatnonzero(forest.in_bag_[0] > 0)[0]
        assert oob_ensemble_chf(forest, int(inside)) is None

    def test_sklearn_params(self):
        est = RandomSurvivalForest(n_estimators=5, min_deaths=2, random_state=1)
        assert clone(est).get_params()["min_deaths"] == 2

    def test_score_is_c_fraction(self, small_forest, veteran):
        s = small_forest.score(veteran.X, (veteran.time, veteran.status))
        assert 0.5 < s <= 1.0

    def test_bad_params(self, veteran):
        with pytest.raises(ValueError):
            RandomSurvivalForest(n_estimators=0).fit(veteran.X, (veteran.time, veteran.status))


@pytest.fixture(scope="module")
def pbc():
    return load_example("pbc")


class TestImputation:
    def test_fills_only_missing(self, pbc):
        imputed, forest = impute_adaptive(pbc, n_estimators=10, seed=0)
        assert imputed.n_missing == 0
        observed = ~np.isnan(pbc.X)
        np.testing.assert_array_equal(imputed.X[observed], pbc.X[observed])
        assert forest is not None

    def test_categorical_imputes_valid_levels(self):
        rng = np.random.default_rng(0)
        n = 60
        X = np.column_stack([rng.normal(size=n), rng.integers(0, 3, n).astype(float)])
        X[rng.uniform(size=n) < 0.2, 1] = np.nan
        X[rng.uniform(size=n) < 0.2, 0] = np.nan
        data = Dataset(X, rng.exponential(5, n) + 0.1, rng.integers(0, 2, n),
                       (FeatureMeta("x"), FeatureMeta("g", "categorical", ("a", "b", "c"))))
        imputed, _ = impute_adaptive(data, n_estimators=8, min_deaths=1, seed=1)
        assert set(np.unique(imputed.X[:, 1])) <= {0.0, 1.0, 2.0}
        lo, hi = np.nanmin(X[:, 0]), np.nanmax(X[:, 0])
        assert np.all((imputed.X[:, 0] >= lo) & (imputed.X[:, 0] <= hi))

    def test_complete_data_untouched(self, veteran):
        out, forest = impute_adaptive(veteran, n_estimators=2)
        assert out is veteran and forest is None

    def test_predict_with_missing(self, pbc):
        forest = grow_forest(pbc, 10, seed=0)
        a = forest.predict(pbc.X[:20])
        b = forest.predict(pbc.X[:20])
        assert np.all(np.isfinite(a))
        np.testing.assert_array_equal(a, b)


class TestPersistence:
    def test_round_trip(self, small_forest, veteran, tmp_path):
        save_forest(small_forest, tmp_path / "m.json")
        loaded = load_forest(tmp_path / "m.json")
        np.testing.assert_array_equal(loaded.predict(veteran.X), small_forest.predict(veteran.X))
        assert loaded.feature_meta_ == veteran.features

    def test_unknown_version(self, small_forest):
        doc = forest_to_dict(small_forest)
        doc["version"] = 99
        with pytest.raises(ModelFormatError):
            forest_from_dict(doc)
