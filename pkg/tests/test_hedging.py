import numpy as np
import pytest

from amput import (
    ConvexPayoff,
    RegionLabel,
    StrikePair,
    build_psi,
    build_superhedge,
    duality_gap,
    hedge_cost,
    price,
    put_value,
    superhedge_from_psi,
    to_transport_plan,
    uniform_measure,
    verify_pathwise,
)
from amput.errors import NotConvex, NotDominating
from amput.hedging import integrate_piecewise_linear


class TestConvexPayoff:
    def test_value_and_slope(self):
        psi = ConvexPayoff([(0.0, 1.0), (1.0, 0.5)], slope=0.1, intercept=0.2)
        ys = np.array([-1.0, 0.5, 2.0])
        expect = 0.1 * ys + 0.2 + 1.0 * np.maximum(-ys, 0.0) \
            + 0.5 * np.maximum(1.0 - ys, 0.0)
        assert np.allclose(psi.value(ys), expect, atol=1e-14)
        assert psi.right_slope(-5.0) == pytest.approx(0.1 - 1.5)
        assert psi.right_slope(5.0) == pytest.approx(0.1)

    def test_negative_weight_rejected(self):
        with pytest.raises(NotConvex):
            ConvexPayoff([(0.0, -0.5)])

    def test_midpoint_convexity(self):
        psi = ConvexPayoff([(-1.0, 0.3), (0.5, 0.9), (2.0, 0.1)])
        ys = np.linspace(-3.0, 4.0, 41)
        mid = psi.value(0.5 * (ys[:-1] + ys[1:]))
        avg = 0.5 * (psi.value(ys[:-1]) + psi.value(ys[1:]))
        assert np.all(mid <= avg + 1e-14)

    def test_dominates_put(self):
        assert ConvexPayoff([(0.25, 1.0)]).dominates_put(0.25)
        # two-point mixture hitting the put at both strikes
        theta = (0.25 + 55 / 36) / (7 / 12 + 55 / 36)
        psi = ConvexPayoff([(-55 / 36, 1.0 - theta), (7 / 12, theta)])
        assert psi.dominates_put(0.25)
        assert not ConvexPayoff([(0.25, 0.5)]).dominates_put(0.25)

    def test_cost_under_matches_quadrature(self):
        nu = uniform_measure(-2.0, 2.0, 2000)
        psi = ConvexPayoff([(-0.7, 0.4), (1.1, 0.6)], slope=0.05, intercept=0.1)
        ys = np.linspace(-2.0, 2.0, 200001)
        quad = np.trapezoid(psi.value(ys) * 0.25, ys)
        assert psi.cost_under(nu) == pytest.approx(quad, abs=1e-7)


class TestIntegration:
    def test_piecewise_linear_against_quadrature(self):
        mu = uniform_measure(-1.0, 1.0, 1000)
        kinks = np.array([-0.5, 0.2, 0.8])
        values = np.array([0.3, 0.1, 0.4])
        left_slope, right_slope = -0.25, 0.5
        exact = integrate_piecewise_linear(mu, kinks, values, left_slope,
                                           right_slope)

        def fn(x):
            return np.interp(x, kinks, values) \
                + np.minimum(x - kinks[0], 0.0) * left_slope \
                + np.maximum(x - kinks[-1], 0.0) * right_slope

        xs = np.linspace(-1.0, 1.0, 400001)
        quad = np.trapezoid(fn(xs) * 0.5, xs)
        assert exact == pytest.approx(quad, abs=1e-8)


class TestRegionHedges:
    def test_uniform_psi_components(self, uniform_built):
        mu, nu, m = uniform_built
        K = StrikePair(0.5, 0.25)
        sol = price(m, mu, nu, K)
        psi = build_psi(sol, m, K)
        (k_lo, w_lo), (k_hi, w_hi) = psi.components
        assert k_lo == pytest.approx(-55 / 36, abs=1e-9)
        assert w_lo == pytest.approx(3 / 19, abs=1e-9)
        assert k_hi == pytest.approx(7 / 12, abs=1e-9)
        assert w_hi == pytest.approx(16 / 19, abs=1e-9)

    def test_hedge_cost_equals_price(self, all_built):
        for name, mu, nu, m, (k1, k2) in all_built:
            K = StrikePair(k1, k2)
            sol = price(m, mu, nu, K)
            h = build_superhedge(sol, m, mu, nu, K)
            assert h.cost == pytest.approx(sol.price, abs=1e-8), name
            assert duality_gap(sol, h, mu, nu) == pytest.approx(0.0, abs=1e-8)

    def test_b_region_closed_form(self, single_jump_built):
        mu, nu, m = single_jump_built
        K = StrikePair(5.0, -1.5)
        sol = price(m, mu, nu, K)
        assert sol.region is RegionLabel.B
        expect = put_value(mu, 5.0) + put_value(nu, -1.5) - put_value(mu, -1.5)
        assert sol.price == pytest.approx(expect, abs=1e-12)
        h = build_superhedge(sol, m, mu, nu, K)
        assert h.cost == pytest.approx(expect, abs=1e-12)

    def test_non_dominating_psi_rejected(self):
        psi = ConvexPayoff([(0.25, 0.5)])
        with pytest.raises(NotDominating):
            superhedge_from_psi(psi, StrikePair(0.5, 0.25),
                                np.linspace(-1, 1, 11))

    def test_discrete_vs_exact_cost(self, uniform_built):
        mu, nu, m = uniform_built
        K = StrikePair(0.5, 0.25)
        sol = price(m, mu, nu, K)
        h = build_superhedge(sol, m, mu, nu, K)
        exact = hedge_cost(h, mu, nu)
        atomic = hedge_cost(h, mu, nu, discrete=True)
        assert atomic == pytest.approx(exact, abs=5e-4)


class TestPathwise:
    def test_no_violations_on_plan_samples(self, uniform_built):
        mu, nu, m = uniform_built
        K = StrikePair(0.5, 0.25)
        sol = price(m, mu, nu, K)
        h = build_superhedge(sol, m, mu, nu, K)
        plan = to_transport_plan(m, mu, nu)
        rng = np.random.default_rng(3)
        xs, ys = plan.sample(rng, 20000)
        report = verify_pathwise(h, (xs, ys), K)
        assert report["violations"] == 0

    def test_adversarial_grid(self, uniform_built):
        mu, nu, m = uniform_built
        K = StrikePair(0.5, 0.25)
        sol = price(m, mu, nu, K)
        h = build_superhedge(sol, m, mu, nu, K)
        xs = np.repeat(np.linspace(-1.0, 1.0, 101), 101)
        ys = np.tile(np.linspace(-2.0, 2.0, 101), 101)
        report = verify_pathwise(h, (xs, ys), K)
        assert report["violations"] == 0
