"""Evaluation metrics for right-censored predictions.

C-index with the full concordance case table, Kaplan-Meier estimators,
IPCW Brier score, prediction-error curves and the integrated Brier score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .stepfunction import StepFunction

logger = logging.getLogger(__name__)


class NoPermissiblePairsError(ValueError):
    pass


def concordance_values(risk, time, status):
    """Sum of concordance values and number of permissible pairs.

    Risk is compared with exact equality. For a pair with ``T_i < T_j`` the
    earlier subject must have died; it scores 1 if its risk is higher, 0.5 on
    a risk tie and 0 otherwise. Pairs tied in time score: both deaths -> 1 on
    a risk tie, 0.5 otherwise; death vs censored -> 1 if the death has the
    higher risk, 0.5 otherwise; both censored -> not permissible.
    """
    risk = np.asarray(risk, dtype=float)
    time = np.asarray(time, dtype=float)
    dead = np.asarray(status).astype(bool)
    if not (risk.shape == time.shape == dead.shape):
        raise ValueError("risk, time and status must have equal length")
    r_i, r_j = risk[:, None], risk[None, :]
    gt, eq = r_i > r_j, r_i == r_j

    earlier = (time[:, None] < time[None, :]) & dead[:, None]
    total = float(np.sum(earlier & gt) + 0.5 * np.sum(earlier & eq))
    n_pairs = int(earlier.sum())

    same = time[:, None] == time[None, :]
    both_dead = np.triu(same & dead[:, None] & dead[None, :], k=1)
    total += float(np.sum(both_dead & eq) + 0.5 * np.sum(both_dead & ~eq))
    n_pairs += int(both_dead.sum())

    mixed = same & dead[:, None] & ~dead[None, :]
    total += float(np.sum(mixed & gt) + 0.5 * np.sum(mixed & ~gt))
    n_pairs += int(mixed.sum())
    return total, n_pairs


def c_index(risk, time, status) -> float:
    """Harrell's C-index on the 0-100 scale (higher risk = earlier death)."""
    total, n_pairs = concordance_values(risk, time, status)
    if n_pairs == 0:
        raise NoPermissiblePairsError("no permissible pairs")
    return 100.0 * total / n_pairs


def kaplan_meier(time, status) -> StepFunction:
    """Product-limit survival estimate; knots at the distinct event times."""
    time = np.asarray(time, dtype=float)
    dead = np.asarray(status).astype(bool)
    if time.size == 0:
        raise ValueError("kaplan_meier needs at least one subject")
    ev = np.unique(time[dead])
    if ev.size == 0:
        return StepFunction([], [], 1.0)
    at_risk = time.size - np.searchsorted(np.sort(time), ev, side="left")
    deaths = np.bincount(np.searchsorted(ev, time[dead]), minlength=ev.size)
    return StepFunction(ev, np.cumprod(1.0 - deaths / at_risk), 1.0)


def censoring_survival(time, status) -> StepFunction:
    """Reverse Kaplan-Meier estimate of the censoring survival function G."""
    return kaplan_meier(time, 1 - np.asarray(status).astype(int))


def _survival_at(surv, t):
    if isinstance(surv, np.ndarray) and surv.dtype != object:
        return np.asarray(surv, dtype=float)
    return np.array([s(t) for s in surv], dtype=float)


def brier_terms(surv_t, time, status, G: StepFunction, t: float):
    """IPCW Brier score at ``t`` and the number of subjects dropped for G = 0.

    ``surv_t`` holds the predicted survival of every subject at ``t``.
    """
    surv_t = np.asarray(surv_t, dtype=float)
    time = np.asarray(time, dtype=float)
    dead = np.asarray(status).astype(bool)
    if time.size == 0:
        raise ValueError("empty test set")
    alive = time > t
    g_t = G(t)
    g_before = G.left_limit(time)
    died_before = ~alive & dead
    drop = (alive & (g_t <= 0)) | (died_before & (g_before <= 0))
    w = np.zeros(time.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        w[died_before] = 1.0 / g_before[died_before]
        if g_t > 0:
            w[alive] = 1.0 / g_t
    keep = ~drop
    n_drop = int(drop.sum())
    if n_drop:
        logger.debug("dropped %d subject(s) with zero censoring weight at t=%g", n_drop, t)
    if not keep.any():
        return float("nan"), n_drop
    resid = alive.astype(float) - surv_t
    return float(np.sum(w[keep] * resid[keep] ** 2) / keep.sum()), n_drop


def brier_score(surv, time, status, G: StepFunction, t: float) -> float:
    """IPCW Brier score at time ``t``.

    ``surv`` is a sequence of survival StepFunctions or an array of predicted
    survival probabilities at ``t``.
    """
    return brier_terms(_survival_at(surv, t), time, status, G, t)[0]


@dataclass
class PredictionErrorCurve:
    times: np.ndarray
    errors: np.ndarray
    n_dropped: int = 0

    def to_records(self):
        return [{"t": float(t), "e": float(e)} for t, e in zip(self.times, self.errors)]


def pec(surv, time, status, G: StepFunction, grid=None) -> PredictionErrorCurve:
    """Brier score at every grid time.

    ``surv`` is a list of survival StepFunctions or an array of shape
    ``(n_subjects, len(grid))``. The default grid is the distinct event times
    of the test data.
    """
    time = np.asarray(time, dtype=float)
    if grid is None:
        grid = np.unique(time[np.asarray(status).astype(bool)])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty evaluation grid")
    if isinstance(surv, np.ndarray) and surv.dtype != object:
        S = np.asarray(surv, dtype=float).reshape(time.size, grid.size)
    else:
        S = np.array([s(grid) for s in surv]).reshape(time.size, grid.size)
    errors = np.empty(grid.size)
    dropped = 0
    for k, t in enumerate(grid):
        errors[k], nd = brier_terms(S[:, k], time, status, G, t)
        dropped += nd
    return PredictionErrorCurve(grid, errors, dropped)


def ibs(curve: PredictionErrorCurve, tau: float) -> float:
    """Integrated Brier score over ``[0, tau]`` divided by ``tau``.

    The curve is linearly interpolated between grid points and held at its
    first value on ``[0, first grid time]``.
    """
    t = np.asarray(curve.times, dtype=float)
    e = np.asarray(curve.errors, dtype=float)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if tau > t[-1]:
        raise ValueError(f"tau={tau} exceeds the last grid time {t[-1]}")
    ok = ~np.isnan(e)
    t, e = t[ok], e[ok]
    inner = t < tau
    xs = np.concatenate([[0.0], t[inner], [tau]])
    ys = np.concatenate([[e[0]], e[inner], [np.interp(tau, t, e)]])
    return float(np.trapezoid(ys, xs) / tau)


def default_tau(time) -> float:
    """95th percentile of observed times."""
    return float(np.percentile(np.asarray(time, dtype=float), 95))


@dataclass
class MetricsReport:
    c_index: float
    ibs: float
    tau: float
    pec: PredictionErrorCurve
    n_dropped_weight_zero: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"c_index": self.c_index, "ibs": self.ibs, "tau": self.tau,
                "pec": self.pec.to_records(),
                "n_dropped_weight_zero": self.n_dropped_weight_zero, **self.extra}


def evaluate(surv_matrix, risk, grid, time, status, G: StepFunction, tau=None) -> MetricsReport:
    """C-index, PEC and IBS of one model on one test set.

    ``surv_matrix`` holds predicted survival on ``grid``; the PEC is evaluated
    on the test event times up to ``tau`` plus ``tau`` itself.
    """
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    tau = default_tau(time) if tau is None else float(tau)
    ev = np.unique(time[status.astype(bool)])
    pec_grid = np.unique(np.concatenate([ev[ev < tau], [tau]]))
    fns = [StepFunction(grid, s, 1.0) for s in np.asarray(surv_matrix)]
    curve = pec(fns, time, status, G, pec_grid)
    return MetricsReport(c_index(risk, time, status), ibs(curve, tau), tau, curve, curve.n_dropped)


__all__ = [
    "MetricsReport", "NoPermissiblePairsError", "PredictionErrorCurve", "brier_score",
    "brier_terms", "c_index", "censoring_survival", "concordance_values", "default_tau",
    "evaluate", "ibs", "kaplan_meier", "pec",
]
