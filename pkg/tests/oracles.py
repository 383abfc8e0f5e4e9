"""Independent reference implementations used by the tests.

These are deliberately naive (explicit loops, no shared code with the
package) so that agreement is meaningful.
"""

import math

import numpy as np


def textbook_logrank(time, status, group):
    """Two-sample log-rank Z of group 1 (``group`` True) against group 0.

    Hypergeometric variance with the usual tie correction; 0 when the
    variance vanishes.
    """
    time = [float(t) for t in time]
    status = [int(s) for s in status]
    group = [bool(g) for g in group]
    death_times = sorted({t for t, s in zip(time, status) if s == 1})
    o_minus_e = 0.0
    var = 0.0
    for t in death_times:
        n = sum(1 for u in time if u >= t)
        n1 = sum(1 for u, g in zip(time, group) if u >= t and g)
        d = sum(1 for u, s in zip(time, status) if u == t and s == 1)
        d1 = sum(1 for u, s, g in zip(time, status, group) if u == t and s == 1 and g)
        o_minus_e += d1 - d * n1 / n
        if n > 1:
            var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    if var <= 0:
        return 0.0
    return o_minus_e / math.sqrt(var)


def _unique_deaths(time, status, mask):
    return len({t for t, s, m in zip(time, status, mask) if s == 1 and m})


def enumerate_splits(X, time, status, features, min_deaths, categorical=()):
    """Every admissible split in enumeration order: ``(feature, cut, L)``.

    Order: candidate features as given; numeric cuts at ascending midpoints
    of consecutive distinct values; categorical levels ascending.
    """
    X = np.asarray(X, dtype=float)
    out = []
    for f in features:
        x = X[:, f]
        values = sorted(set(x.tolist()))
        if f in categorical:
            cuts = [(v, x == v) for v in values] if len(values) > 1 else []
        else:
            cuts = [((a + b) / 2, x <= (a + b) / 2) for a, b in zip(values, values[1:])]
        for cut, left in cuts:
            if (_unique_deaths(time, status, left) < min_deaths
                    or _unique_deaths(time, status, ~left) < min_deaths):
                continue
            out.append((f, cut, textbook_logrank(time, status, left)))
    return out


def brute_force_best(X, time, status, features, min_deaths, categorical=(), rtol=1e-9):
    """First split (enumeration order) whose ``|L|`` attains the maximum, or None."""
    splits = [s for s in enumerate_splits(X, time, status, features, min_deaths, categorical)
              if abs(s[2]) > 0]
    if len(set(np.asarray(time)[np.asarray(status) == 1])) < 2 * min_deaths or not splits:
        return None
    best = max(abs(s[2]) for s in splits)
    for s in splits:
        if abs(s[2]) >= best * (1 - rtol):
            return s
    return None


def pair_concordance(risk, time, status):
    """C-index (0-100) by enumerating unordered pairs with the full case table."""
    n = len(time)
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            ti, tj = time[i], time[j]
            di, dj = status[i], status[j]
            ri, rj = risk[i], risk[j]
            if ti != tj:
                if ti > tj:
                    ti, tj, di, dj, ri, rj = tj, ti, dj, di, rj, ri
                if not di:
                    continue
                pairs += 1
                total += 1.0 if ri > rj else 0.5 if ri == rj else 0.0
            elif di and dj:
                pairs += 1
                total += 1.0 if ri == rj else 0.5
            elif di or dj:
                pairs += 1
                r_dead, r_cens = (ri, rj) if di else (rj, ri)
                total += 1.0 if r_dead > r_cens else 0.5
    if pairs == 0:
        return None
    return 100.0 * total / pairs


def unweighted_brier(surv_t, time, t):
    """Mean of (1{T > t} - S(t))^2 over all subjects (no censoring)."""
    alive = (np.asarray(time) > t).astype(float)
    return float(np.mean((alive - np.asarray(surv_t)) ** 2))


def nelson_aalen(time, status, t):
    """Nelson-Aalen CHF at ``t`` by direct summation."""
    h = 0.0
    for u in sorted({x for x, s in zip(time, status) if s == 1 and x <= t}):
        n = sum(1 for x in time if x >= u)
        d = sum(1 for x, s in zip(time, status) if x == u and s == 1)
        h += d / n
    return h


def random_survival_data(rng, n, p, censor_frac=0.3, ties=True):
    """Small random dataset with optional tied times."""
    X = rng.normal(size=(n, p))
    if ties:
        time = rng.integers(1, max(3, n // 2), size=n).astype(float)
    else:
        time = rng.exponential(10.0, size=n) + 0.01
    status = (rng.uniform(size=n) > censor_frac).astype(int)
    return X, time, status
