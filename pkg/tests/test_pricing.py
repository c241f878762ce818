import numpy as np
import pytest

from amput import (
    RegionLabel,
    StrikePair,
    classify_region,
    evaluate_under_plan,
    lambda_fn,
    price,
    put_value,
    solve_critical,
    to_transport_plan,
    upsilon,
)
from amput.errors import DegenerateDenominator, NoRoot, OutOfDomain
from amput.pricing import critical_ratios


class TestStrikePair:
    def test_finite_required(self):
        with pytest.raises(OutOfDomain):
            StrikePair(float("nan"), 0.0)
        with pytest.raises(OutOfDomain):
            StrikePair(1.0, float("inf"))

    def test_plain_pair(self):
        K = StrikePair(0.5, 0.25)
        assert K.k1 == 0.5 and K.k2 == 0.25


class TestSlopeGap:
    def test_upsilon_signs(self):
        K = StrikePair(0.5, 0.25)
        # ratios (K1-K2)/(x-f) and (g-K1)/(g-x) cross at the balanced triple
        assert upsilon(-55 / 36, 1 / 18, 7 / 12, K) == pytest.approx(0.0, abs=1e-14)
        assert upsilon(-1.0, 0.0, 0.52, K) < 0
        assert upsilon(-2.0, 0.0, 0.7, K) > 0

    def test_upsilon_degenerate(self):
        with pytest.raises(DegenerateDenominator):
            upsilon(0.0, 0.0, 1.0, StrikePair(0.5, 0.25))

    def test_balanced_triple_equalizes_ratios(self):
        K = StrikePair(0.5, 0.25)
        r = critical_ratios(-55 / 36, 1 / 18, 7 / 12, K)
        assert max(r) - min(r) <= 1e-14

    def test_lambda_domain(self, uniform_built):
        _, _, m = uniform_built
        K = StrikePair(0.5, 0.25)
        with pytest.raises(OutOfDomain):
            lambda_fn(m, 0.9, K)
        assert lambda_fn(m, 0.4, K) > 0
        assert lambda_fn(m, 0.02, K) < 0


class TestUniformFixture:
    """Closed-form oracle: the balance equations for U[-1,1] -> U[-2,2]
    give f = -(x+3)/2, g = (3x+1)/2; substituting into the slope-gap root
    yields x* = 1/18, f* = -55/36, g* = 7/12 and price 7785/10368."""

    K = StrikePair(0.5, 0.25)

    def test_critical_triple(self, uniform_built):
        _, _, m = uniform_built
        f, x, g, _, _ = solve_critical(m, self.K)
        assert x == pytest.approx(1 / 18, abs=1e-9)
        assert f == pytest.approx(-55 / 36, abs=1e-9)
        assert g == pytest.approx(7 / 12, abs=1e-9)

    def test_price(self, uniform_built):
        mu, nu, m = uniform_built
        sol = price(m, mu, nu, self.K)
        assert sol.region is RegionLabel.R
        assert sol.price == pytest.approx(7785 / 10368, abs=1e-9)
        assert sol.threshold == pytest.approx(1 / 18, abs=1e-9)

    def test_plan_value_approaches_price(self, uniform_built):
        mu, nu, m = uniform_built
        sol = price(m, mu, nu, self.K)
        plan = to_transport_plan(m, mu, nu)
        val = evaluate_under_plan(plan, sol.threshold, self.K)
        assert val == pytest.approx(sol.price, abs=2e-5)
        assert val <= sol.price + 1e-12


class TestClassification:
    def test_mixture_block2_region(self, mixture_built):
        mu, nu, m = mixture_built
        sol = price(m, mu, nu, StrikePair(10.5, 10.25))
        assert sol.region is RegionLabel.R
        # block 2 is the uniform fixture translated by +10
        assert sol.x_star == pytest.approx(10 + 1 / 18, abs=1e-7)

    def test_mixture_wall(self, mixture_built):
        mu, nu, m = mixture_built
        sol = price(m, mu, nu, StrikePair(4.0, 0.0))
        assert sol.region is RegionLabel.W
        assert sol.aux["f_prime"] == pytest.approx(-2.0, abs=1e-6)
        assert sol.aux["x_prime"] == pytest.approx(2.0, abs=1e-6)

    def test_single_jump_regions(self, single_jump_built):
        mu, nu, m = single_jump_built
        cases = [((6.5, 4.0), RegionLabel.G), ((4.5, 1.0), RegionLabel.W),
                 ((5.0, -1.5), RegionLabel.B), ((8.0, 2.0), RegionLabel.R),
                 ((6.9, 6.0), RegionLabel.R), ((6.5, 5.5), RegionLabel.R)]
        for (k1, k2), want in cases:
            assert classify_region(m, StrikePair(k1, k2)) is want

    def test_gap_fixture_jump_root(self, gap_built):
        _, _, m = gap_built
        f, x, g, _, _ = solve_critical(m, StrikePair(2.8, 2.0))
        # root pinned on the merged double jump at the left edge
        assert x == pytest.approx(2.5, abs=1e-9)
        assert f == pytest.approx(0.0, abs=1e-9)
        assert g == pytest.approx(50.0 / 17.0, abs=1e-4)

    def test_no_root_in_b_region(self, single_jump_built):
        _, _, m = single_jump_built
        with pytest.raises(NoRoot):
            solve_critical(m, StrikePair(5.0, -1.5))


class TestDegenerate:
    def test_k1_below_k2(self, uniform_built):
        mu, nu, m = uniform_built
        sol = price(m, mu, nu, StrikePair(0.1, 0.25))
        assert sol.region is RegionLabel.DEG_EUROPEAN
        assert sol.price == pytest.approx(put_value(nu, 0.25), abs=1e-10)
        assert sol.threshold == -np.inf

    def test_k1_below_support(self, uniform_built):
        mu, nu, m = uniform_built
        sol = price(m, mu, nu, StrikePair(-1.5, -1.8))
        assert sol.region is RegionLabel.DEG_EUROPEAN
        assert sol.price == pytest.approx(put_value(nu, -1.8), abs=1e-10)

    def test_k1_above_nu_support(self, uniform_built):
        mu, nu, m = uniform_built
        sol = price(m, mu, nu, StrikePair(2.5, 0.0))
        assert sol.region is RegionLabel.DEG_INTRINSIC
        assert sol.price == pytest.approx(2.5 - mu.mean, abs=1e-10)
        assert sol.threshold == np.inf


class TestMonotonicity:
    def test_price_monotone_in_strikes(self, uniform_built):
        mu, nu, m = uniform_built
        k1s = np.linspace(0.2, 0.8, 7)
        prices = [price(m, mu, nu, StrikePair(k1, 0.1)).price for k1 in k1s]
        assert np.all(np.diff(prices) >= -1e-12)
        k2s = np.linspace(-0.5, 0.45, 7)
        prices = [price(m, mu, nu, StrikePair(0.5, k2)).price for k2 in k2s]
        assert np.all(np.diff(prices) >= -1e-12)

    def test_weak_bounds(self, uniform_built):
        mu, nu, m = uniform_built
        for k1, k2 in [(0.5, 0.25), (0.8, -0.5), (0.2, 0.1), (1.5, 0.5)]:
            p = price(m, mu, nu, StrikePair(k1, k2)).price
            lo = max(put_value(mu, k1), put_value(nu, k2))
            hi = put_value(nu, k1)
            assert lo - 1e-9 <= p <= hi + 1e-9
