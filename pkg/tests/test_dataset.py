import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brsf.dataset import (DataError, Dataset, FeatureMeta, bootstrap_sample, concat,
                          load_example, read_csv_text, split_folds, to_csv_text)
from brsf.stepfunction import StepFunction, average


def small_dataset():
    X = np.array([[1.0, 0.0], [2.0, 1.0], [np.nan, 0.0], [4.0, 1.0]])
    return Dataset(X, [5.0, 3.0, 8.0, 1.0], [1, 0, 1, 1],
                   (FeatureMeta("a"), FeatureMeta("g", "categorical", ("x", "y"))))


class TestDataset:
    def test_shapes_and_counts(self):
        d = small_dataset()
        assert d.n_records == 4 and d.n_features == 2
        assert d.class_counts() == (1, 3)
        assert d.n_missing == 1
        np.testing.assert_array_equal(d.event_times, [1.0, 5.0, 8.0])
        np.testing.assert_array_equal(d.categorical_mask, [False, True])

    def test_arrays_are_read_only(self):
        d = small_dataset()
        with pytest.raises(ValueError):
            d.X[0, 0] = 9.0

    @pytest.mark.parametrize("time,status", [([0.0, 1, 1, 1], [1, 1, 1, 1]),
                                             ([1.0, 1, 1, 1], [1, 2, 0, 0])])
    def test_rejects_bad_outcomes(self, time, status):
        with pytest.raises(DataError):
            Dataset(np.zeros((4, 1)), time, status, (FeatureMeta("a"),))

    def test_rejects_unknown_level(self):
        with pytest.raises(DataError):
            Dataset(np.array([[2.0]]), [1.0], [1],
                    (FeatureMeta("g", "categorical", ("a", "b")),))

    def test_concat_and_subset(self):
        d = small_dataset()
        both = concat(d, d.subset([0, 1]))
        assert both.n_records == 6
        np.testing.assert_array_equal(both.time[4:], d.time[:2])


class TestCsv:
    TEXT = "age,grp,time,status\n61,a,5,1\nNA,b,3,0\n70,a,9,1\n"

    def test_parse(self):
        d = read_csv_text(self.TEXT, categorical=["grp"])
        assert d.feature_names == ["age", "grp"]
        assert np.isnan(d.X[1, 0])
        np.testing.assert_array_equal(d.X[:, 1], [0, 1, 0])
        assert d.features[1].levels == ("a", "b")

    def test_round_trip(self):
        d = read_csv_text(self.TEXT, categorical=["grp"])
        e = read_csv_text(to_csv_text(d), categorical=["grp"])
        np.testing.assert_array_equal(d.X, e.X)
        np.testing.assert_array_equal(d.time, e.time)
        np.testing.assert_array_equal(d.status, e.status)

    @pytest.mark.parametrize("text,message", [
        ("a,time,status\n1,2\n", "malformed row length"),
        ("a,time,status\n1,0,1\n", "non-positive time"),
        ("a,time,status\n1,2,3\n", "status outside"),
        ("a,time,status\nfoo,2,1\n", "unparseable"),
        ("a,time,status\n1,NA,1\n", "missing time/status"),
        ("a,status\n1,1\n", "not found"),
        ("", "header"),
    ])
    def test_errors(self, text, message):
        with pytest.raises(DataError, match=message):
            read_csv_text(text)


class TestExamples:
    @pytest.mark.parametrize("name,n,censored,events", [
        ("veteran", 137, 9, 128), ("lung", 228, 63, 165), ("pbc", 418, 257, 161)])
    def test_class_counts(self, name, n, censored, events):
        d = load_example(name)
        assert d.n_records == n
        assert d.class_counts() == (censored, events)


class TestResampling:
    def test_folds_partition(self):
        folds = split_folds(23, 5, seed=1)
        all_test = np.concatenate([folds.test_indices(f) for f in range(5)])
        np.testing.assert_array_equal(np.sort(all_test), np.arange(23))
        assert folds.sizes().max() - folds.sizes().min() <= 1

    @pytest.mark.parametrize("k", [1, 24])
    def test_bad_k(self, k):
        with pytest.raises(ValueError):
            split_folds(23, k, seed=0)

    @given(st.integers(1, 200), st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_bootstrap_partition(self, n, seed):
        in_bag, oob = bootstrap_sample(n, seed)
        assert in_bag.size == n
        assert np.all(np.diff(in_bag) >= 0)
        assert set(oob).isdisjoint(set(in_bag))
        assert set(oob) | set(in_bag) == set(range(n))


class TestStepFunction:
    def test_right_continuous(self):
        f = StepFunction([1.0, 3.0], [0.5, 2.0])
        np.testing.assert_array_equal(f([0.5, 1.0, 2.0, 3.0, 10.0]), [0, 0.5, 0.5, 2.0, 2.0])
        np.testing.assert_array_equal(f.left_limit([1.0, 3.0]), [0.0, 0.5])

    def test_average(self):
        f = StepFunction([1.0], [1.0])
        g = StepFunction([2.0], [3.0])
        h = average([f, g])
        np.testing.assert_allclose(h([0.5, 1.5, 2.5]), [0.0, 0.5, 2.0])

    def test_dict_round_trip(self):
        f = StepFunction([1.0, 2.0], [0.9, 0.4], 1.0)
        assert StepFunction.from_dict(f.to_dict()) == f
