"""Log-rank split statistic, best-split search and terminal-node hazards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..stepfunction import StepFunction
from . import _kernels


@dataclass(frozen=True)
class SplitRule:
    """``x[feature] <= threshold`` (numeric) or ``x[feature] == threshold``
    (categorical level code) routes left."""

    feature: int
    threshold: float
    statistic: float
    categorical: bool = False

    def goes_left(self, value):
        value = np.asarray(value, dtype=float)
        if self.categorical:
            return value == self.threshold
        return value <= self.threshold


def death_index(time, status):
    """Node death times and, per member, how many of them are ``<= T_i``."""
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    death_times = np.unique(time[status == 1])
    kidx = np.searchsorted(death_times, time, side="right").astype(np.int64)
    return death_times, kidx


def log_rank_statistic(time, status, left_mask) -> float:
    """Two-sample log-rank statistic of the left daughter against its parent.

    Sums run over the unique death times of the parent node. Bootstrap
    duplicates count once per copy. Returns 0 when the variance is 0.
    """
    time = np.asarray(time, dtype=float)
    status = np.asarray(status).astype(bool)
    left_mask = np.asarray(left_mask, dtype=bool)
    if time.shape != status.shape or time.shape != left_mask.shape:
        raise ValueError("time, status and left_mask must have equal length")
    if not left_mask.any() or left_mask.all():
        raise ValueError("empty side: both daughters must be non-empty")
    if not status.any():
        raise ValueError("no deaths among members")
    death_times, kidx = death_index(time, status)
    m = death_times.size
    d, y = _kernels.node_counts(kidx, status, m)
    d1, y1 = _kernels.side_counts(kidx, status, left_mask, m)
    return float(_kernels.logrank_score(d1, y1, d, y))


def unique_deaths(time, status) -> int:
    return int(np.unique(np.asarray(time)[np.asarray(status) == 1]).size)


def best_split(X, time, status, candidate_features, min_deaths: int = 3,
               categorical=None) -> SplitRule | None:
    """Search all thresholds of the candidate features for the largest ``|L|``.

    Numeric thresholds are midpoints of consecutive distinct values. A
    candidate is admissible only if each daughter keeps ``min_deaths`` unique
    death times. Ties keep the first candidate in enumeration order
    (candidate order, then ascending threshold). ``X`` must be complete.
    """
    X = np.asarray(X, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status).astype(bool)
    cand = np.asarray(candidate_features, dtype=np.int64)
    if np.isnan(X[:, cand]).any():
        raise ValueError("best_split requires imputed (complete) candidate columns")
    if categorical is None:
        is_cat = np.zeros(cand.size, dtype=bool)
    else:
        is_cat = np.asarray(categorical, dtype=bool)[cand]
    death_times, kidx = death_index(time, status)
    if death_times.size < 2 * min_deaths or cand.size == 0:
        return None
    col, cut, stat, found = _kernels.best_split_kernel(
        np.ascontiguousarray(X[:, cand]), is_cat, kidx, status, death_times.size, min_deaths)
    if not found:
        return None
    return SplitRule(int(cand[col]), float(cut), float(stat), bool(is_cat[col]))


def node_chf(time, status) -> StepFunction:
    """Nelson-Aalen cumulative hazard of a node's (in-bag) members."""
    time = np.asarray(time, dtype=float)
    status = np.asarray(status).astype(bool)
    if time.size == 0:
        raise ValueError("node has no members")
    death_times = np.unique(time[status])
    if death_times.size == 0:
        return StepFunction([], [])
    at_risk = time.size - np.searchsorted(np.sort(time), death_times, side="left")
    deaths = np.bincount(np.searchsorted(death_times, time[status]), minlength=death_times.size)
    return StepFunction(death_times, np.cumsum(deaths / at_risk))
