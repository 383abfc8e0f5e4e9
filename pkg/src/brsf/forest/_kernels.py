"""Compiled inner loops for log-rank split search.

Members of a node are described by ``kidx``: the number of node death times
``<= T_i`` (member ``i`` is at risk at death times ``0..kidx-1``), and ``dead``:
1 when the member's own time is a death. Counts are kept as float64 so every
code path feeds identical numbers to :func:`logrank_score`.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def logrank_score(d1, y1, d, y):
    num = 0.0
    var = 0.0
    for l in range(d.shape[0]):
        yl = y[l]
        if yl <= 0.0:
            continue
        num += d1[l] - y1[l] * (d[l] / yl)
        if yl > 1.0:
            frac = y1[l] / yl
            var += frac * (1.0 - frac) * ((yl - d[l]) / (yl - 1.0)) * d[l]
    if var <= 0.0:
        return 0.0
    return num / math.sqrt(var)


@njit(cache=True, nogil=True)
def node_counts(kidx, dead, m):
    d = np.zeros(m)
    y = np.zeros(m)
    for i in range(kidx.shape[0]):
        k = kidx[i]
        for l in range(k):
            y[l] += 1.0
        if dead[i]:
            d[k - 1] += 1.0
    return d, y


@njit(cache=True, nogil=True)
def side_counts(kidx, dead, mask, m):
    d1 = np.zeros(m)
    y1 = np.zeros(m)
    for i in range(kidx.shape[0]):
        if mask[i]:
            k = kidx[i]
            for l in range(k):
                y1[l] += 1.0
            if dead[i]:
                d1[k - 1] += 1.0
    return d1, y1


@njit(cache=True, nogil=True)
def _admissible(d1, d, d0):
    left = 0
    right = 0
    for l in range(d.shape[0]):
        if d1[l] > 0.0:
            left += 1
        if d[l] - d1[l] > 0.0:
            right += 1
    return left >= d0 and right >= d0


@njit(cache=True, nogil=True)
def best_split_kernel(Xc, is_cat, kidx, dead, m, d0):
    """Scan every candidate column; first strict maximum of ``|L|`` wins.

    A split must beat ``|L| = 0`` to be selected.

    Returns ``(column, cut, statistic, found)``. For categorical columns the
    cut is the level code sent left.
    """
    n, p = Xc.shape
    d, y = node_counts(kidx, dead, m)
    best_abs = 0.0
    best_stat = 0.0
    best_col = -1
    best_cut = 0.0
    found = False
    for c in range(p):
        x = Xc[:, c]
        if is_cat[c]:
            levels = np.unique(x)
            if levels.shape[0] < 2:
                continue
            for lv in levels:
                mask = x == lv
                d1, y1 = side_counts(kidx, dead, mask, m)
                if not _admissible(d1, d, d0):
                    continue
                stat = logrank_score(d1, y1, d, y)
                if abs(stat) > best_abs:
                    found = True
                    best_abs = abs(stat)
                    best_stat = stat
                    best_col = c
                    best_cut = lv
            continue
        order = np.argsort(x, kind="mergesort")
        d1 = np.zeros(m)
        y1 = np.zeros(m)
        for pos in range(n - 1):
            i = order[pos]
            k = kidx[i]
            for l in range(k):
                y1[l] += 1.0
            if dead[i]:
                d1[k - 1] += 1.0
            xa = x[i]
            xb = x[order[pos + 1]]
            if xb <= xa:
                continue
            if not _admissible(d1, d, d0):
                continue
            stat = logrank_score(d1, y1, d, y)
            if abs(stat) > best_abs:
                found = True
                best_abs = abs(stat)
                best_stat = stat
                best_col = c
                best_cut = (xa + xb) / 2.0
    return best_col, best_cut, best_stat, found
