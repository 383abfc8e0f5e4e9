"""SMOTE oversampling of the minority survival class (censored or event)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sklearn.base import BaseEstimator

from .dataset import Dataset, FeatureMeta, concat
from .validation import categorical_mask, check_survival_data, make_y


class BalancingError(ValueError):
    pass


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0
    extrapolate: bool = False
    time_mode: str = "copy"

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.target_ratio <= 1:
            raise ValueError("target_ratio must lie in (0, 1]")
        if self.time_mode not in ("copy", "interp"):
            raise ValueError("time_mode must be 'copy' or 'interp'")


@dataclass(frozen=True)
class BalancedDataset:
    data: Dataset
    synthetic: np.ndarray
    m1: int
    m2: int
    minority_status: int
    minority_after: int

    @property
    def synthetic_count(self) -> int:
        return int(self.synthetic.sum())

    def sidecar(self) -> dict:
        return {"m1": self.m1, "m2": self.m2, "synthetic_count": self.synthetic_count,
                "minority_status": self.minority_status, "minority_after": self.minority_after}


def feature_scale(X, is_cat):
    """Column means and standard deviations used to standardize numeric features."""
    X = np.asarray(X, dtype=float)
    mean = np.where(is_cat, 0.0, np.nanmean(X, axis=0))
    std = np.where(is_cat, 1.0, np.nanstd(X, axis=0))
    return mean, std


def _distances(X, query, is_cat, mean, std):
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(std > 0, (X - query) / np.where(std > 0, std, 1.0), 0.0)
    num = np.where(is_cat, 0.0, z) ** 2
    cat = np.where(is_cat, (X != query).astype(float), 0.0)
    return (num + cat).sum(axis=1)


def nearest_minority_neighbors(data: Dataset, index: int, k: int, scale=None) -> np.ndarray:
    """The ``k`` nearest records of the same class as ``index`` (excluding it).

    Distance: squared Euclidean over standardized numeric features plus a 0/1
    mismatch per categorical feature. Ties break by record index.
    """
    status = data.status[index]
    members = np.flatnonzero(data.status == status)
    others = members[members != index]
    if others.size < k:
        raise BalancingError(f"minority class too small: {members.size} records for k={k}")
    if np.isnan(data.X[members]).any():
        raise BalancingError("unimputed missing value in minority class; impute first")
    is_cat = data.categorical_mask
    mean, std = feature_scale(data.X, is_cat) if scale is None else scale
    dist = _distances(data.X[others], data.X[index], is_cat, mean, std)
    order = np.lexsort((others, dist))
    return others[order[:k]]


def smote_generate(xi, xj, gamma: float, categorical=None, extrapolate: bool = False):
    """Synthetic covariates from seed ``xi`` and neighbour ``xj``.

    Numeric features: ``xi + gamma * (xj - xi)``, a point on the segment
    (``xi + gamma * (xi - xj)`` when ``extrapolate``). Categorical features take
    ``xi``'s level when ``gamma < 0.5`` and ``xj``'s otherwise.
    """
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape:
        raise ValueError("length mismatch between parent vectors")
    if np.isnan(xi).any() or np.isnan(xj).any():
        raise ValueError("missing value in parent vector")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    is_cat = np.zeros(xi.size, bool) if categorical is None else np.asarray(categorical, bool)
    step = (xi - xj) if extrapolate else (xj - xi)
    out = xi + gamma * step
    return np.where(is_cat, xi if gamma < 0.5 else xj, out)


def balance_dataset(data: Dataset, cfg: SmoteConfig = SmoteConfig()) -> BalancedDataset:
    """Oversample the smaller class until minority/majority reaches the target.

    Synthetic records take the seed record's time and status (or an
    interpolated time with ``time_mode="interp"``). The original records come
    first and are left untouched.
    """
    m1, m2 = data.class_counts()
    if m1 == 0 or m2 == 0:
        raise BalancingError("both classes must be non-empty")
    minority_status = 1 if m2 < m1 else 0
    n_min, n_maj = min(m1, m2), max(m1, m2)
    target = int(np.floor(cfg.target_ratio * n_maj))
    n_new = target - n_min
    no_synth = np.zeros(data.n_records, dtype=bool)
    if n_new <= 0:
        return BalancedDataset(data, no_synth, m1, m2, minority_status, n_min)
    if n_min <= cfg.k_neighbors:
        raise BalancingError(
            f"degenerate minority class: {n_min} records for k_neighbors={cfg.k_neighbors}")
    minority = np.flatnonzero(data.status == minority_status)
    if np.isnan(data.X[minority]).any():
        raise BalancingError("unimputed missing value in minority class; impute first")
    is_cat = data.categorical_mask
    scale = feature_scale(data.X, is_cat)
    neighbors = {int(i): nearest_minority_neighbors(data, int(i), cfg.k_neighbors, scale)
                 for i in minority}

    rng = np.random.default_rng(cfg.seed)
    seeds = np.concatenate([rng.permutation(minority)
                            for _ in range(-(-n_new // n_min))])[:n_new]
    X_new = np.empty((n_new, data.n_features))
    t_new = np.empty(n_new)
    for s, i in enumerate(seeds):
        j = rng.choice(neighbors[int(i)])
        gamma = rng.uniform(0.0, 1.0)
        X_new[s] = smote_generate(data.X[i], data.X[j], gamma, is_cat, cfg.extrapolate)
        if cfg.time_mode == "interp":
            t_new[s] = data.time[i] + gamma * (data.time[j] - data.time[i])
        else:
            t_new[s] = data.time[i]
    synth = Dataset(X_new, t_new, np.full(n_new, minority_status), data.features)
    flags = np.concatenate([no_synth, np.ones(n_new, dtype=bool)])
    return BalancedDataset(concat(data, synth), flags, m1, m2, minority_status, target)


class SurvivalSMOTE(BaseEstimator):
    """Resampler with the imbalanced-learn ``fit_resample`` interface.

    Parameters mirror :class:`SmoteConfig`; ``categorical_features`` marks
    level-coded columns.
    """

    def __init__(self, k_neighbors=5, target_ratio=1.0, categorical_features=None,
                 extrapolate=False, time_mode="copy", random_state=0):
        self.k_neighbors = k_neighbors
        self.target_ratio = target_ratio
        self.categorical_features = categorical_features
        self.extrapolate = extrapolate
        self.time_mode = time_mode
        self.random_state = random_state

    def fit_resample(self, X, y):
        X, time, status = check_survival_data(X, y)
        mask = categorical_mask(self.categorical_features, X.shape[1])
        feats = []
        for j in range(X.shape[1]):
            if mask[j]:
                n_levels = int(np.nanmax(X[:, j])) + 1
                feats.append(FeatureMeta(f"x{j}", "categorical", tuple(map(str, range(n_levels)))))
            else:
                feats.append(FeatureMeta(f"x{j}"))
        cfg = SmoteConfig(self.k_neighbors, self.target_ratio, self.random_state,
                          self.extrapolate, self.time_mode)
        res = balance_dataset(Dataset(X, time, status, tuple(feats)), cfg)
        self.synthetic_mask_ = res.synthetic
        self.sidecar_ = res.sidecar()
        return res.data.X.copy(), make_y(res.data.time, res.data.status)
