import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brsf.theory import (EULER_GAMMA, IdealSplitModel, brier_ratio, censored_node_hazard,
                         corollary_sweep, digamma, mortality_node_hazard, trigamma,
                         unbalanced_brier)


def direct_mortality_hazard(m2, d0):
    y = m2 - d0
    return sum(k / (y - k) for k in range(1, y))


class TestSpecialFunctions:
    def test_known_values(self):
        assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-14)
        assert digamma(0.5) == pytest.approx(-EULER_GAMMA - 2 * math.log(2), abs=1e-13)
        assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, abs=1e-13)
        assert trigamma(0.5) == pytest.approx(math.pi**2 / 2, abs=1e-12)

    @pytest.mark.parametrize("y", range(1, 101))
    def test_digamma_recurrence(self, y):
        assert abs(digamma(y + 1) - digamma(y) - 1 / y) < 1e-12

    @given(st.floats(0.05, 200))
    def test_trigamma_recurrence(self, x):
        assert trigamma(x + 1) == pytest.approx(trigamma(x) - 1 / x**2, rel=1e-10, abs=1e-12)

    def test_against_scipy(self):
        special = pytest.importorskip("scipy.special")
        xs = np.linspace(0.01, 60, 400)
        np.testing.assert_allclose([digamma(x) for x in xs], special.digamma(xs), rtol=1e-12,
                                   atol=1e-12)
        np.testing.assert_allclose([trigamma(x) for x in xs], special.polygamma(1, xs),
                                   rtol=1e-12)

    @pytest.mark.parametrize("f", [digamma, trigamma])
    def test_domain(self, f):
        with pytest.raises(ValueError):
            f(0.0)


class TestHazards:
    def test_worked_mortality_value(self):
        assert mortality_node_hazard(9, 3) == pytest.approx(8.7, abs=1e-12)

    @pytest.mark.parametrize("d0", [1, 2, 3, 5])
    def test_closed_form_matches_summation(self, d0):
        for m2 in range(2 * d0, 501):
            assert abs(mortality_node_hazard(m2, d0) - direct_mortality_hazard(m2, d0)) < 1e-9

    def test_worked_censored_value(self):
        assert censored_node_hazard(20, 3) == pytest.approx(1 / 12 + 2 / 11 + 3 / 10)
        assert censored_node_hazard(20, 3, "full") == pytest.approx(1 / 22 + 2 / 21 + 3 / 20)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            mortality_node_hazard(5, 3)
        with pytest.raises(ValueError):
            IdealSplitModel(100, 5, 3)


class TestBrierRatio:
    def test_identity_without_balancing(self):
        c = brier_ratio(IdealSplitModel(100, 10, 3, m2_prime=10))
        assert c.ratio == pytest.approx(1.0)
        assert c.rho == pytest.approx(c.rho_prime)

    def test_ratio_is_rho_quotient(self):
        model = IdealSplitModel(120, 12, 3, m2_prime=60)
        c = brier_ratio(model)
        assert c.ratio == pytest.approx(c.rho_prime / c.rho, rel=1e-12)
        assert c.rho == pytest.approx(unbalanced_brier(model))

    def test_corollary_small_grid(self):
        rows = corollary_sweep(60, 10, 3, range(11, 61))
        ratios = [c.ratio for _, c in rows]
        assert max(ratios) < 1
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))

    def test_censored_minority_mirror(self):
        a = brier_ratio(IdealSplitModel(100, 10, 3, m2_prime=50))
        b = brier_ratio(IdealSplitModel(10, 100, 3, m1_prime=50, minority="censored"))
        assert a.ratio == pytest.approx(b.ratio)

    def test_grid_must_ascend(self):
        with pytest.raises(ValueError):
            corollary_sweep(60, 10, 3, [20, 15])
