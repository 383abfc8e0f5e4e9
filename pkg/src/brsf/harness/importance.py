"""Variable importance, dependence profiles and backward feature selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..forest import RandomSurvivalForest, grow_forest
from ..forest.ensemble import _OOB
from ..metrics import NoPermissiblePairsError, c_index

logger = logging.getLogger(__name__)


def _oob_c(H, counts, time, status) -> float:
    ok = counts > 0
    return c_index(H[ok].sum(axis=1), time[ok], status[ok]) / 100.0


def vimp(forest: RandomSurvivalForest, feature: int, seed: int = 0, n_repeats: int = 1) -> float:
    """Permutation importance of one feature.

    In every tree the feature is permuted among that tree's out-of-bag
    records; the score is the OOB C-index of the intact forest minus that of
    the permuted one (C on the 0-1 scale), averaged over ``n_repeats``
    permutations. Routing uses the same random streams in both passes, so a
    feature no tree splits on scores exactly 0.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    X = forest._fit_X
    time, status = forest._fit_time, forest._fit_status
    n, T = X.shape[0], forest.event_times_.size
    H0 = np.zeros((n, T))
    Hp = np.zeros((n_repeats, n, T))
    counts = np.zeros(n, dtype=np.int64)
    for b, tree in enumerate(forest.trees_):
        idx = np.flatnonzero(forest.in_bag_[b] == 0)
        if idx.size == 0:
            continue
        Xb = X[idx]
        H0[idx] += forest._leaf_chf[b][tree.apply(Xb, forest._tree_rng(b, _OOB))]
        perm_rng = np.random.default_rng([seed, b])
        for r in range(n_repeats):
            Xp = Xb.copy()
            Xp[:, feature] = perm_rng.permutation(Xb[:, feature])
            Hp[r, idx] += forest._leaf_chf[b][tree.apply(Xp, forest._tree_rng(b, _OOB))]
        counts[idx] += 1
    intact = _oob_c(H0, counts, time, status)
    return float(np.mean([intact - _oob_c(h, counts, time, status) for h in Hp]))


def minimal_depth(forest: RandomSurvivalForest, feature: int) -> float:
    """Mean over trees of the shallowest split depth of ``feature``.

    The root has depth 0; a tree that never splits on the feature contributes
    its height plus one.
    """
    r = forest.n_features_in_
    depths = []
    for tree in forest.trees_:
        d = tree.first_split_depth(r)[feature]
        depths.append(d if d >= 0 else tree.height + 1)
    return float(np.mean(depths))


def _rank(values, descending):
    v = -np.asarray(values) if descending else np.asarray(values)
    ranks = np.empty(v.size, dtype=np.int64)
    ranks[np.argsort(v, kind="stable")] = np.arange(1, v.size + 1)
    return ranks


@dataclass
class ImportanceReport:
    features: list[str]
    vimp: np.ndarray
    minimal_depth: np.ndarray

    @property
    def vimp_rank(self):
        return _rank(self.vimp, descending=True)

    @property
    def depth_rank(self):
        return _rank(self.minimal_depth, descending=False)

    def rows(self):
        for k, name in enumerate(self.features):
            yield {"feature": name, "vimp": float(self.vimp[k]),
                   "md": float(self.minimal_depth[k]),
                   "vimp_rank": int(self.vimp_rank[k]), "md_rank": int(self.depth_rank[k])}


def importance(forest: RandomSurvivalForest, seed: int = 0, names=None,
               n_repeats: int = 1) -> ImportanceReport:
    r = forest.n_features_in_
    names = list(names) if names is not None else [f"x{j}" for j in range(r)]
    v = np.array([vimp(forest, j, seed, n_repeats) for j in range(r)])
    md = np.array([minimal_depth(forest, j) for j in range(r)])
    return ImportanceReport(names, v, md)


def survival_at(forest: RandomSurvivalForest, X, times) -> np.ndarray:
    """Ensemble survival of each row of ``X`` at arbitrary ``times``."""
    H = forest.predict_cumulative_hazard(X)
    H = np.hstack([np.zeros((H.shape[0], 1)), H])
    pos = np.searchsorted(forest.event_times_, np.asarray(times, dtype=float), side="right")
    return np.exp(-H[:, pos])


def default_grid(values, n_points: int = 25, categorical: bool = False):
    """Observed levels for a categorical feature, else evenly spaced quantiles."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if categorical:
        return np.unique(v)
    return np.unique(np.quantile(v, np.linspace(0.0, 1.0, n_points)))


@dataclass
class PartialDependence:
    feature: int
    grid: np.ndarray
    times: np.ndarray
    survival: np.ndarray  # (len(grid), len(times))

    def rows(self):
        for a, g in enumerate(self.grid):
            for b, t in enumerate(self.times):
                yield {"value": float(g), "t": float(t), "survival": float(self.survival[a, b])}


def partial_dependence(forest: RandomSurvivalForest, X, feature: int, grid, times):
    """Mean predicted survival at ``times`` with ``feature`` fixed at each grid value."""
    X = np.asarray(X, dtype=float)
    grid = np.asarray(grid, dtype=float)
    times = np.asarray(times, dtype=float)
    if grid.size == 0:
        raise ValueError("empty value grid")
    out = np.empty((grid.size, times.size))
    for a, g in enumerate(grid):
        Xg = X.copy()
        Xg[:, feature] = g
        out[a] = survival_at(forest, Xg, times).mean(axis=0)
    return PartialDependence(feature, grid, times, out)


@dataclass
class VariableDependence:
    feature: int
    values: np.ndarray
    times: np.ndarray
    survival: np.ndarray  # (n_subjects, len(times))

    def rows(self):
        for i, x in enumerate(self.values):
            for b, t in enumerate(self.times):
                yield {"subject": i, "value": float(x), "t": float(t),
                       "survival": float(self.survival[i, b])}


def variable_dependence(forest: RandomSurvivalForest, X, feature: int, times):
    """Each subject's predicted survival at ``times`` against its feature value."""
    X = np.asarray(X, dtype=float)
    times = np.asarray(times, dtype=float)
    return VariableDependence(feature, X[:, feature].copy(), times,
                              survival_at(forest, X, times))


@dataclass
class SelectionStep:
    features: list[str]
    error: float
    candidates: dict = field(default_factory=dict)
    removed: str | None = None


@dataclass
class SelectionResult:
    selected: list[str]
    error: float
    trace: list[SelectionStep]

    def to_dict(self):
        return {"selected": self.selected, "error": self.error,
                "trace": [vars(s) for s in self.trace]}


def oob_error(data: Dataset, n_estimators, max_features, min_deaths, seed, n_jobs=None):
    forest = grow_forest(data, n_estimators, max_features, min_deaths, seed, n_jobs)
    try:
        return 1.0 - forest.oob_score() / 100.0
    except NoPermissiblePairsError:
        return float("nan")


def backward_select(data: Dataset, n_estimators=1000, max_features="sqrt", min_deaths=3,
                    seed=0, n_jobs=None, min_features: int = 1) -> SelectionResult:
    """Greedy backward elimination on OOB error ``1 - C``.

    Each round refits the forest without each remaining feature and drops the
    one whose removal gives the lowest error, as long as that error does not
    exceed the current one (ties favour the smaller model). Every forest uses
    the same seed.
    """
    current = list(range(data.n_features))
    names = data.feature_names
    err = oob_error(data, n_estimators, max_features, min_deaths, seed, n_jobs)
    trace = [SelectionStep([names[j] for j in current], err)]
    while len(current) > min_features:
        cand = {}
        for j in current:
            keep = [c for c in current if c != j]
            cand[j] = oob_error(data.with_features(keep), n_estimators, max_features, min_deaths,
                                seed, n_jobs)
        best = min(cand, key=lambda j: (np.nan_to_num(cand[j], nan=np.inf), current.index(j)))
        trace[-1].candidates = {names[j]: e for j, e in cand.items()}
        if not cand[best] <= err:
            break
        current.remove(best)
        err = cand[best]
        logger.info("removed %s, OOB error %.4f", names[best], err)
        trace[-1].removed = names[best]
        trace.append(SelectionStep([names[j] for j in current], err))
    return SelectionResult([names[j] for j in current], err, trace)

