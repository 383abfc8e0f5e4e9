"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array, check_consistent_length

SURVIVAL_DTYPE = np.dtype([("status", bool), ("time", float)])


def make_y(time, status) -> np.ndarray:
    """Pack survival outcomes into the structured array the estimators expect."""
    time = np.asarray(time, dtype=float).ravel()
    status = np.asarray(status).ravel()
    check_consistent_length(time, status)
    y = np.empty(time.size, dtype=SURVIVAL_DTYPE)
    y["time"] = time
    y["status"] = status.astype(bool)
    return y


def check_y_survival(y) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(time, status)`` from a structured array, a ``(time, status)``
    pair, or an ``n x 2`` array with columns time and status."""
    if isinstance(y, tuple) and len(y) == 2:
        time, status = y
    else:
        arr = np.asarray(y)
        if arr.dtype.names:
            names = arr.dtype.names
            status_key = "status" if "status" in names else "event"
            if status_key not in names or "time" not in names:
                raise ValueError(f"structured y needs 'time' and 'status' fields, got {names}")
            time, status = arr["time"], arr[status_key]
        elif arr.ndim == 2 and arr.shape[1] == 2:
            time, status = arr[:, 0], arr[:, 1]
        else:
            raise ValueError("y must be a structured array, a (time, status) pair or an n x 2 array")
    time = np.asarray(time, dtype=float).ravel()
    status = np.asarray(status).ravel()
    check_consistent_length(time, status)
    if not np.all(np.isfinite(time)) or np.any(time <= 0):
        raise ValueError("survival times must be positive and finite")
    if not np.all(np.isin(status, (0, 1))):
        raise ValueError("status must be 0 (censored) or 1 (event)")
    return time, status.astype(np.int64)


def check_survival_X(X, n_features=None) -> np.ndarray:
    X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, expected {n_features}")
    return X


def check_survival_data(X, y):
    X = check_survival_X(X)
    time, status = check_y_survival(y)
    check_consistent_length(X, time)
    return X, time, status


def check_seed(seed) -> int:
    """Resolve ``None`` to a fresh integer seed; pass integers through."""
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**32))
    if isinstance(seed, numbers.Integral):
        return int(seed)
    raise ValueError(f"random_state must be an int or None, got {seed!r}")


def categorical_mask(categorical_features, n_features: int) -> np.ndarray:
    mask = np.zeros(n_features, dtype=bool)
    if categorical_features is None:
        return mask
    cf = np.asarray(categorical_features)
    if cf.dtype == bool:
        if cf.size != n_features:
            raise ValueError("boolean categorical mask has the wrong length")
        return cf.copy()
    mask[cf.astype(np.int64)] = True
    return mask


def resolve_max_features(max_features, n_features: int) -> int:
    if max_features in (None, "auto", "sqrt"):
        return max(1, int(np.ceil(np.sqrt(n_features))))
    if isinstance(max_features, str):
        raise ValueError(f"unknown max_features {max_features!r}")
    p = int(max_features)
    if not 1 <= p <= n_features:
        raise ValueError(f"max_features={p} out of range [1, {n_features}]")
    return p
