"""Random survival forest estimator and ensemble cumulative hazards."""

from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..dataset import Dataset, bootstrap_sample
from ..stepfunction import StepFunction
from ..validation import (categorical_mask, check_seed, check_survival_data, check_survival_X,
                          resolve_max_features)
from .tree import ImputationDraws, grow_tree, observed_pools

# stream tags mixed into per-tree seeds
_GROW, _OOB, _PREDICT = 1, 2, 3


def _fit_one(X, time, status, seed, b, max_features, min_deaths, categorical, pools):
    in_bag, _ = bootstrap_sample(X.shape[0], [seed, b])
    tree, draws = grow_tree(X, time, status, in_bag, max_features=max_features,
                            min_deaths=min_deaths, categorical=categorical,
                            rng=np.random.default_rng([seed, b, _GROW]), fallback_pools=pools)
    return in_bag, tree, draws


class RandomSurvivalForest(BaseEstimator):
    """Random survival forest with log-rank splitting.

    Parameters
    ----------
    n_estimators : int, default=1000
        Number of trees ``B``.
    max_features : int or {"sqrt", "auto"}, default="sqrt"
        Candidate features drawn afresh at every node; ``"sqrt"`` means
        ``ceil(sqrt(n_features))``.
    min_deaths : int, default=3
        Minimum number of unique death times in each daughter node (``d0``).
    categorical_features : array-like of int or bool mask, optional
        Columns holding integer level codes. They split one level versus the
        rest.
    random_state : int or None
        Seed. Tree ``b`` derives its bootstrap and growth streams from
        ``(random_state, b)``, so results do not depend on ``n_jobs``.
    n_jobs : int or None
        Number of threads used to grow trees.

    Attributes
    ----------
    event_times_ : ndarray
        Unique training death times; the time grid of all predictions.
    in_bag_ : ndarray of shape (n_estimators, n_samples)
        Bootstrap multiplicity of every training record in every tree.
    trees_ : list of SurvivalTree
    """

    def __init__(self, n_estimators=1000, max_features="sqrt", min_deaths=3,
                 categorical_features=None, random_state=None, n_jobs=None):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.min_deaths = min_deaths
        self.categorical_features = categorical_features
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, time, status = check_survival_data(X, y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.min_deaths < 1:
            raise ValueError("min_deaths must be >= 1")
        n, r = X.shape
        self.n_features_in_ = r
        self.categorical_mask_ = categorical_mask(self.categorical_features, r)
        self.max_features_ = resolve_max_features(self.max_features, r)
        self.seed_ = check_seed(self.random_state)
        pools = observed_pools(X)
        results = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(_fit_one)(X, time, status, self.seed_, b, self.max_features_,
                              self.min_deaths, self.categorical_mask_, pools)
            for b in range(self.n_estimators))
        self.in_bag_ = np.zeros((self.n_estimators, n), dtype=np.int32)
        self.trees_ = []
        draws = []
        for b, (in_bag, tree, dr) in enumerate(results):
            np.add.at(self.in_bag_[b], in_bag, 1)
            self.trees_.append(tree)
            draws.append(dr)
        self.event_times_ = np.unique(time[status == 1])
        self._fit_X = X
        self._fit_time = time
        self._fit_status = status
        self.imputed_X_ = _summarize_imputation(X, draws, self.categorical_mask_, pools)
        self._build_leaf_tables()
        return self

    def _build_leaf_tables(self):
        self._leaf_chf = [tree.leaf_matrix(self.event_times_) for tree in self.trees_]

    def _tree_rng(self, b, stream):
        return np.random.default_rng([self.seed_, b, stream])

    def predict_cumulative_hazard(self, X) -> np.ndarray:
        """Ensemble CHF on ``event_times_``: array of shape (n_samples, n_times)."""
        check_is_fitted(self, "trees_")
        X = check_survival_X(X, self.n_features_in_)
        H = np.zeros((X.shape[0], self.event_times_.size))
        for b, tree in enumerate(self.trees_):
            H += self._leaf_chf[b][tree.apply(X, self._tree_rng(b, _PREDICT))]
        return H / len(self.trees_)

    def predict_cumulative_hazard_function(self, X) -> list[StepFunction]:
        H = self.predict_cumulative_hazard(X)
        return [StepFunction(self.event_times_, h) for h in H]

    def predict_survival(self, X) -> np.ndarray:
        return np.exp(-self.predict_cumulative_hazard(X))

    def predict_survival_function(self, X) -> list[StepFunction]:
        return [StepFunction(self.event_times_, s, 1.0) for s in self.predict_survival(X)]

    def predict(self, X) -> np.ndarray:
        """Risk score: ensemble CHF summed over all training event times."""
        return self.predict_cumulative_hazard(X).sum(axis=1)

    def score(self, X, y) -> float:
        from ..metrics import c_index
        from ..validation import check_y_survival
        time, status = check_y_survival(y)
        return c_index(self.predict(X), time, status) / 100.0

    def oob_cumulative_hazard(self, X=None, exclude_trees=None) -> tuple[np.ndarray, np.ndarray]:
        """Out-of-bag ensemble CHF of every training record.

        ``X`` optionally replaces the training covariates (same shape), which
        is how permutation importance re-routes records. Returns ``(H, n_oob)``;
        rows with ``n_oob == 0`` are NaN.
        """
        check_is_fitted(self, "trees_")
        X = self._fit_X if X is None else check_survival_X(X, self.n_features_in_)
        if X.shape[0] != self.in_bag_.shape[1]:
            raise ValueError("X must have one row per training record")
        H = np.zeros((X.shape[0], self.event_times_.size))
        counts = np.zeros(X.shape[0], dtype=np.int64)
        for b, tree in enumerate(self.trees_):
            idx = np.flatnonzero(self.in_bag_[b] == 0)
            if idx.size == 0:
                continue
            leaves = tree.apply(X[idx], self._tree_rng(b, _OOB))
            H[idx] += self._leaf_chf[b][leaves]
            counts[idx] += 1
        with np.errstate(invalid="ignore", divide="ignore"):
            H = H / counts[:, None]
        H[counts == 0] = np.nan
        return H, counts

    def oob_predict(self) -> np.ndarray:
        H, _ = self.oob_cumulative_hazard()
        return H.sum(axis=1)

    def oob_score(self) -> float:
        """OOB C-index on the 0-100 scale over records with an OOB estimate."""
        from ..metrics import c_index
        H, counts = self.oob_cumulative_hazard()
        ok = counts > 0
        return c_index(H[ok].sum(axis=1), self._fit_time[ok], self._fit_status[ok])


def _summarize_imputation(X, draws, is_cat, pools):
    if not pools:
        return X.copy()
    out = X.copy()
    d = ImputationDraws(*(np.concatenate([getattr(dr, k) for dr in draws])
                          for k in ("subject", "feature", "value")))
    for f, pool in pools.items():
        na = np.flatnonzero(np.isnan(X[:, f]))
        sel = d.feature == f
        subj, vals = d.subject[sel], d.value[sel]
        if is_cat[f]:
            fallback = _mode(pool)
        else:
            fallback = float(np.mean(pool))
        for i in na:
            v = vals[subj == i]
            if v.size == 0:
                out[i, f] = fallback
            elif is_cat[f]:
                out[i, f] = _mode(v)
            else:
                out[i, f] = float(np.mean(v))
    return out


def _mode(values):
    levels, counts = np.unique(values, return_counts=True)
    return float(levels[np.argmax(counts)])


def grow_forest(data: Dataset, n_estimators: int = 1000, max_features="sqrt",
                min_deaths: int = 3, seed: int = 0, n_jobs=None) -> RandomSurvivalForest:
    """Fit a :class:`RandomSurvivalForest` on a :class:`Dataset`."""
    cats = np.flatnonzero(data.categorical_mask)
    forest = RandomSurvivalForest(n_estimators=n_estimators, max_features=max_features,
                                  min_deaths=min_deaths, categorical_features=cats,
                                  random_state=seed, n_jobs=n_jobs)
    forest.fit(data.X, (data.time, data.status))
    forest.feature_meta_ = data.features
    return forest


def impute_adaptive(data: Dataset, n_estimators: int = 1000, max_features="sqrt",
                    min_deaths: int = 3, seed: int = 0, n_jobs=None):
    """Summary adaptive-tree imputation of a dataset.

    Missing cells are drawn from node-level in-bag pools while the trees grow;
    each record's summary value is the mean (numeric) or mode (categorical)
    of its terminal-node draws. Returns ``(imputed_dataset, forest)``; the
    forest's trees hold the pools used for test-time imputation.
    """
    if data.n_missing == 0:
        return data, None
    forest = grow_forest(data, n_estimators, max_features, min_deaths, seed, n_jobs)
    return data.with_X(forest.imputed_X_), forest


def oob_ensemble_chf(forest: RandomSurvivalForest, i: int) -> StepFunction | None:
    """OOB ensemble CHF of training record ``i``; ``None`` if never out of bag."""
    if not 0 <= i < forest.in_bag_.shape[1]:
        raise IndexError(f"record index {i} out of range")
    H, counts = forest.oob_cumulative_hazard()
    if counts[i] == 0:
        return None
    return StepFunction(forest.event_times_, H[i])


def ensemble_chf(forest: RandomSurvivalForest, x) -> StepFunction:
    H = forest.predict_cumulative_hazard(np.asarray(x, dtype=float).reshape(1, -1))
    return StepFunction(forest.event_times_, H[0])
