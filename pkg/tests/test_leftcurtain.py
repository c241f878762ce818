import numpy as np
import pytest

from amput import (
    Measure,
    build_by_ode,
    build_left_curtain,
    check_convex_order,
    coupling_kernel,
    reverse_construct_nu,
    to_transport_plan,
    uniform_measure,
    validate_monotone_pair,
)
from amput.errors import InvalidInput

from conftest import SJ, sj_f, sj_g


class TestMapShape:
    def test_sandwich_order(self, uniform_built):
        mu, nu, m = uniform_built
        xs = np.linspace(-0.99, 0.99, 57)
        for x in xs:
            f, g = m.f_at(x), m.g_at(x)
            assert f <= x + 1e-12
            assert g >= x - 1e-12

    def test_g_nondecreasing(self, uniform_built):
        _, _, m = uniform_built
        xs = np.linspace(-1.0, 1.0, 301)
        gs = np.array([m.g_at(x) for x in xs])
        assert np.all(np.diff(gs) >= -1e-10)

    def test_monotone_pair_gate(self, single_jump_built):
        _, _, m = single_jump_built
        # raises MonotonicityViolated if any gate fails
        validate_monotone_pair(m.xs, m.fs, m.gs)

    def test_diagonal_where_no_excess(self, single_jump_built):
        _, _, m = single_jump_built
        for x in (0.3, 0.7, 3.5, 3.9):
            assert m.g_at(x) == pytest.approx(x, abs=2e-2)
            assert m.f_at(x) == pytest.approx(x, abs=2e-2)

    def test_g_inverse(self, uniform_built):
        _, _, m = uniform_built
        for k in (0.2, 0.5, 1.2):
            x = m.g_inv(k)
            assert m.g_at(x) == pytest.approx(k, abs=1e-6)


class TestOdeOracle:
    def test_uniform_dispersion_matches_ode(self, uniform_built):
        mu, nu, m = uniform_built

        def rho(v):
            return 0.5 if -1.0 <= v <= 1.0 else 0.0

        def eta(v):
            return 0.25 if -2.0 <= v <= 2.0 else 0.0

        ode = build_by_ode(rho, eta, -1.0, 1.0, -2.0, 2.0, n_steps=4000)
        # closed form for this pair: f = -(x+3)/2, g = (3x+1)/2
        for x in np.linspace(-0.9, 0.9, 19):
            f_true = -(x + 3.0) / 2.0
            g_true = (3.0 * x + 1.0) / 2.0
            assert ode.f_at(x) == pytest.approx(f_true, abs=1e-9)
            assert ode.g_at(x) == pytest.approx(g_true, abs=1e-9)
            assert m.f_at(x) == pytest.approx(f_true, abs=5e-3)
            assert m.g_at(x) == pytest.approx(g_true, abs=5e-3)


class TestSingleJumpRecovery:
    def test_jump_and_regen_recovered(self, single_jump_built):
        _, _, m = single_jump_built
        assert len(m.f_jumps) == 1
        xj, hi, lo = m.f_jumps[0]
        assert xj == pytest.approx(SJ["x_dprime"], abs=0.05)
        assert hi == pytest.approx(SJ["x_prime"], abs=0.05)
        assert lo == pytest.approx(SJ["f_prime"], abs=0.05)
        pairs = [(fp, xp) for (fp, xp, *_r) in m.regen_pairs]
        assert any(abs(fp - SJ["f_prime"]) < 0.05 and
                   abs(xp - SJ["x_prime"]) < 0.05 for (fp, xp) in pairs)

    def test_map_matches_template(self, single_jump_built):
        _, _, m = single_jump_built
        for x in (1.5, 2.5, 4.5, 5.5, 6.5, 8.0):
            assert m.f_at(x) == pytest.approx(sj_f(x), abs=0.03)
            assert m.g_at(x) == pytest.approx(sj_g(x), abs=0.03)

    def test_triple_at_refines_table(self, single_jump_built):
        _, _, m = single_jump_built
        for x in (2.2, 4.7, 6.8):
            rec = m.triple_at(x)
            assert rec["f"] == pytest.approx(sj_f(x), abs=0.02)
            assert rec["g"] == pytest.approx(sj_g(x), abs=0.02)


class TestReverseConstruction:
    def test_mass_and_mean_preserved(self):
        mu = uniform_measure(0.0, 10.0, 300)
        nu = reverse_construct_nu(sj_f, sj_g, mu)
        assert nu.total_mass == pytest.approx(mu.total_mass, abs=1e-12)
        assert nu.mean == pytest.approx(mu.mean, abs=1e-10)

    def test_convex_order_holds(self):
        mu = uniform_measure(0.0, 10.0, 300)
        nu = reverse_construct_nu(sj_f, sj_g, mu).as_density_sampled()
        assert check_convex_order(mu, nu)

    def test_identity_template(self):
        mu = uniform_measure(0.0, 5.0, 100)
        nu = reverse_construct_nu(lambda x: x, lambda x: x, mu)
        assert np.allclose(nu.points, mu.points)
        assert np.allclose(nu.weights, mu.weights)


class TestKernelAndPlan:
    def test_kernel_is_martingale(self, uniform_built):
        _, _, m = uniform_built
        for x in (-0.5, 0.0, 0.5):
            comps = coupling_kernel(m, x)
            mass = sum(w for (_, w) in comps)
            mean = sum(y * w for (y, w) in comps)
            assert mass == pytest.approx(1.0, abs=1e-9)
            assert mean == pytest.approx(x, abs=1e-9)

    def test_plan_residuals(self, uniform_built):
        mu, nu, m = uniform_built
        plan = to_transport_plan(m, mu, nu)
        assert plan.max_marginal_residual() <= 1e-10
        assert plan.max_martingale_residual() <= 1e-10
        plan.validate()

    def test_plan_sampling(self, uniform_built):
        mu, nu, m = uniform_built
        plan = to_transport_plan(m, mu, nu)
        rng = np.random.default_rng(11)
        xs, ys = plan.sample(rng, 20000)
        assert xs.shape == ys.shape == (20000,)
        assert abs(xs.mean() - mu.mean) < 0.03
        assert abs(ys.mean() - nu.mean) < 0.05

    def test_no_mass_crosses_interior_zero(self, mixture_built):
        mu, nu, m = mixture_built
        plan = to_transport_plan(m, mu, nu)
        x0 = 5.0
        xi = plan.row_points[:, None] - x0
        yj = plan.col_points[None, :] - x0
        crossing = float(plan.matrix[(xi * yj) < 0].sum())
        assert crossing <= 1e-12


class TestBuilderGates:
    def test_lopsided_atomic_mu_rejected(self):
        pts = np.linspace(0.0, 1.0, 20)
        w = np.full(20, 0.5 / 19)
        w[10] = 0.5
        mu = Measure(pts, w)
        nu = Measure(np.linspace(-1.0, 2.0, 30), np.full(30, w.sum() / 30))
        with pytest.raises(InvalidInput):
            build_left_curtain(mu, nu)

    def test_gap_fixture_double_jump(self, gap_built):
        _, _, m = gap_built
        assert len(m.g_jumps) == 1
        xj, lo, hi = m.g_jumps[0]
        assert xj == pytest.approx(2.5, abs=1e-6)
        assert hi == pytest.approx(6.0, abs=1e-6)
        assert len(m.f_jumps) == 1
        assert m.f_jumps[0][0] == pytest.approx(2.5, abs=1e-6)
