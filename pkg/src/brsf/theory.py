"""Closed-form hazards and Brier scores for an idealized imbalanced node split.

The parent node holds ``m1`` censored and ``m2`` mortality records. The ideal
split sends ``m2 - d0`` deaths to a mortality leaf and the remaining ``d0``
deaths together with all censored records to a censoring leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

EULER_GAMMA = 0.57721566490153286061

# B_2k / (2k) for the digamma asymptotic expansion
_DIGAMMA_COEF = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760, 1 / 12)
# B_2k for the trigamma asymptotic expansion
_TRIGAMMA_COEF = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)
_SHIFT = 10.0


def digamma(x: float) -> float:
    """psi_0(x) for x > 0 by upward recurrence and the asymptotic series."""
    if x <= 0:
        raise ValueError("digamma is only implemented for x > 0")
    acc = 0.0
    while x < _SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for c in _DIGAMMA_COEF:
        series += c * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """psi_1(x) for x > 0."""
    if x <= 0:
        raise ValueError("trigamma is only implemented for x > 0")
    acc = 0.0
    while x < _SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    p = inv2 * inv
    for c in _TRIGAMMA_COEF:
        series += c * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + series


@dataclass(frozen=True)
class IdealSplitModel:
    """Class sizes of the idealized split.

    ``minority`` selects which class is oversampled: with ``"mortality"``
    the balanced size is ``m2_prime``; with ``"censored"`` the roles of the two
    classes are exchanged and ``m1_prime`` is used.
    """

    m1: int
    m2: int
    d0: int = 3
    m2_prime: int | None = None
    m1_prime: int | None = None
    minority: str = "mortality"
    hc_denominator: str = "half"

    def __post_init__(self):
        if self.minority not in ("mortality", "censored"):
            raise ValueError("minority must be 'mortality' or 'censored'")
        if self.hc_denominator not in ("half", "full"):
            raise ValueError("hc_denominator must be 'half' or 'full'")
        if min(self.m1, self.m2, self.d0) < 1:
            raise ValueError("class sizes and d0 must be positive")
        small, prime = self._minority_sizes()
        if small < 2 * self.d0:
            raise ValueError(f"minority size {small} < 2*d0 = {2 * self.d0}")
        if prime < small:
            raise ValueError("balanced minority size must not shrink")

    def _minority_sizes(self):
        if self.minority == "mortality":
            prime = self.m2 if self.m2_prime is None else self.m2_prime
            return self.m2, prime
        prime = self.m1 if self.m1_prime is None else self.m1_prime
        return self.m1, prime

    def oriented(self):
        """``(majority, minority, minority_prime)`` in the mortality-minority frame."""
        small, prime = self._minority_sizes()
        big = self.m1 if self.minority == "mortality" else self.m2
        return big, small, prime


@lru_cache(maxsize=4096)
def mortality_node_hazard(m2: int, d0: int) -> float:
    """Nelson-Aalen CHF of the mortality leaf at its last event time.

    ``(y-1)*gamma + sum_{i=2..y} psi_0(i)`` with ``y = m2 - d0``.
    """
    if d0 < 1:
        raise ValueError("d0 must be >= 1")
    if m2 < 2 * d0:
        raise ValueError(f"m2={m2} < 2*d0={2 * d0}")
    y = m2 - d0
    return (y - 1) * EULER_GAMMA + sum(digamma(i) for i in range(2, y + 1))


def censored_node_hazard(m1: int, d0: int, denominator: str = "half") -> float:
    """CHF of the censoring leaf: ``sum_{j=1..d0} j / (base + d0 - j)``.

    ``base`` is ``m1/2`` (``denominator="half"``) or ``m1`` (``"full"``).
    """
    if d0 < 1:
        raise ValueError("d0 must be >= 1")
    if m1 < 2:
        raise ValueError("m1 must be >= 2")
    base = m1 / 2 if denominator == "half" else float(m1)
    return sum(j / (base + d0 - j) for j in range(1, d0 + 1))


def brier_from_hazards(m1, m2, d0, h_m, h_c) -> float:
    """Brier score of the idealized split given the two leaf hazards."""
    s_m = math.exp(-h_m)
    s_c = math.exp(-h_c)
    return ((m2 - d0) * s_m**2 + d0 * s_c**2 + m1 * (1 - s_c) ** 2) / (m1 + m2)


def unbalanced_brier(model: IdealSplitModel, use_balanced: bool = False) -> float:
    big, small, prime = model.oriented()
    size = prime if use_balanced else small
    h_m = mortality_node_hazard(size, model.d0)
    h_c = censored_node_hazard(big, model.d0, model.hc_denominator)
    return brier_from_hazards(big, size, model.d0, h_m, h_c)


@dataclass(frozen=True)
class BalanceComparison:
    h_m: float
    h_m_prime: float
    h_c: float
    rho: float
    rho_prime: float
    ratio: float


def brier_ratio(model: IdealSplitModel) -> BalanceComparison:
    """Balanced-to-unbalanced Brier ratio as the product of the size factor
    and the residual-sum factor."""
    big, small, prime = model.oriented()
    d0 = model.d0
    h_m = mortality_node_hazard(small, d0)
    h_mp = mortality_node_hazard(prime, d0)
    h_c = censored_node_hazard(big, d0, model.hc_denominator)
    common = d0 * math.exp(-2 * h_c) + big * (1 - math.exp(-h_c)) ** 2
    num = (prime - d0) * math.exp(-2 * h_mp) + common
    den = (small - d0) * math.exp(-2 * h_m) + common
    ratio = (big + small) / (big + prime) * (num / den)
    return BalanceComparison(h_m, h_mp, h_c, unbalanced_brier(model, False),
                             unbalanced_brier(model, True), ratio)


def corollary_sweep(m1: int, m2: int, d0: int, m2_prime_grid, minority: str = "mortality",
                    hc_denominator: str = "half"):
    """``[(m2_prime, BalanceComparison), ...]`` along an ascending grid."""
    grid = list(m2_prime_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be ascending")
    out = []
    for mp in grid:
        if minority == "mortality":
            model = IdealSplitModel(m1, m2, d0, m2_prime=mp, hc_denominator=hc_denominator)
        else:
            model = IdealSplitModel(m1, m2, d0, m1_prime=mp, minority="censored",
                                    hc_denominator=hc_denominator)
        out.append((mp, brier_ratio(model)))
    return out
