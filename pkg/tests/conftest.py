"""Shared fixtures: canonical measure pairs, built maps and a random
template generator for the duality stress suite."""

import numpy as np
import pytest

from amput import (
    Measure,
    build_left_curtain,
    mixture_uniform_measure,
    reverse_construct_nu,
    uniform_measure,
)

# ---------------------------------------------------------------------------
# canonical fixture definitions
#
# Each fixture is available at several grid sizes so the oracle sandwich can
# run the same instance through grid doublings.


def uniform_pair(n=1000):
    return uniform_measure(-1.0, 1.0, n), uniform_measure(-2.0, 2.0, 2 * n)


MIX_MU_BLOCKS = [(-1.0, 1.0, 0.5), (9.0, 11.0, 0.5)]
MIX_NU_BLOCKS = [(-2.0, 2.0, 0.5), (8.0, 12.0, 0.5)]


def mixture_pair(n=600):
    return (mixture_uniform_measure(MIX_MU_BLOCKS, n),
            mixture_uniform_measure(MIX_NU_BLOCKS, int(1.5 * n)))


GAP_NU_BLOCKS = [(-2.0, 0.0, 0.5), (6.0, 8.0, 0.5)]


def gap_pair(n=400):
    return (uniform_measure(2.5, 3.5, n),
            mixture_uniform_measure(GAP_NU_BLOCKS, 2 * n))


# Single-jump fixture: two excursions, the second one carrying an f-jump.
# Closed-form map data on mu = U(0, 10):
#   x' = 3, f' = -1, x'' = 6, g(x'') = 7, l_nu = -3, r_nu = 13
#   upper/lower jump-triangle edges: L_u(k1) = 4 k1 - 21, L_d(k1) = 8 k1 - 49
SJ = {"x_prime": 3.0, "f_prime": -1.0, "x_dprime": 6.0, "g_dprime": 7.0,
      "l_nu": -3.0, "r_nu": 13.0}


def sj_f(x):
    if x <= 1.0:
        return x
    if x <= 3.0:
        return 1.0 - (x - 1.0)
    if x <= 4.0:
        return x
    if x <= 6.0:
        return 4.0 - 0.5 * (x - 4.0)
    return -1.0 - 0.5 * (x - 6.0)


def sj_g(x):
    if x <= 1.0:
        return x
    if x <= 3.0:
        return x + 0.4 * (x - 1.0) * (3.0 - x)
    if x <= 4.0:
        return x
    return 4.0 + 1.5 * (x - 4.0)


def single_jump_pair(n=400):
    mu = uniform_measure(0.0, 10.0, n)
    nu = reverse_construct_nu(sj_f, sj_g, mu).as_density_sampled()
    return mu, nu


def toy_pair():
    mu = Measure([-1.0, 1.0], [0.5, 0.5])
    nu = Measure([-2.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    return mu, nu


# ---------------------------------------------------------------------------
# session-scoped built maps


@pytest.fixture(scope="session")
def uniform_built():
    mu, nu = uniform_pair()
    return mu, nu, build_left_curtain(mu, nu)


@pytest.fixture(scope="session")
def mixture_built():
    mu, nu = mixture_pair()
    return mu, nu, build_left_curtain(mu, nu)


@pytest.fixture(scope="session")
def gap_built():
    mu, nu = gap_pair()
    return mu, nu, build_left_curtain(mu, nu)


@pytest.fixture(scope="session")
def single_jump_built():
    mu, nu = single_jump_pair()
    return mu, nu, build_left_curtain(mu, nu)


@pytest.fixture(scope="session")
def all_built(uniform_built, mixture_built, gap_built, single_jump_built):
    """(name, mu, nu, map, canonical strikes) for the continuum fixtures."""
    return [
        ("uniform", *uniform_built, (0.5, 0.25)),
        ("mixture", *mixture_built, (10.5, 10.25)),
        ("gap", *gap_built, (2.8, 2.0)),
        ("single-jump", *single_jump_built, (6.5, 4.0)),
    ]


# ---------------------------------------------------------------------------
# random monotone templates for the duality stress suite

SPAN = 10.0


def random_template(rng, kind, n):
    """Random (f, g) template with 0, 1 or 2 excursions on U(0, SPAN).

    Breakpoints snap to the grid and in-support lower branches keep unit
    slope so that the reverse-constructed atoms fall back onto the mu grid;
    off-grid atoms along a diagonal stretch would ask the builder to resolve
    sub-cell excursions that the discretization cannot support.
    """
    h = SPAN / n

    def snap(v):
        return round(v / h) * h

    if kind == 0:
        return (lambda x: x), (lambda x: x)
    if kind == 1:
        e = snap(rng.uniform(1.0, 4.5))
        b1 = rng.uniform(1.2, 2.5)

        def f(x):
            return x if x <= e else e - (x - e)

        def g(x):
            return x if x <= e else e + b1 * (x - e)

        return f, g
    p1 = snap(rng.uniform(0.5, 1.5))
    p2 = snap(p1 + rng.uniform(1.2, 2.2))
    p3 = snap(p2 + rng.uniform(0.5, 1.5))
    c2 = rng.uniform(0.2, 0.5)
    s2 = float(rng.choice([0.5, 1.0]))
    s3 = rng.uniform(0.3, 0.8)
    s4 = rng.uniform(1.2, 2.0)
    f_prime = p1 - (p2 - p1)
    x_dd = p3 + (p3 - p2) / s2

    def f(x):
        if x <= p1:
            return x
        if x <= p2:
            return p1 - (x - p1)
        if x <= p3:
            return x
        if x <= x_dd:
            return p3 - s2 * (x - p3)
        return f_prime - s3 * (x - x_dd)

    def g(x):
        if x <= p1:
            return x
        if x <= p2:
            return x + c2 * (x - p1) * (p2 - x)
        if x <= p3:
            return x
        return p3 + s4 * (x - p3)

    return f, g


def random_pair(rng, index):
    """One deterministic random fixture: (mu, nu, k1, k2, kind)."""
    kind = 0 if index % 10 == 0 else (1 if index % 2 == 0 else 2)
    n = 200 if kind == 2 else 250
    f, g = random_template(rng, kind, n)
    mu = uniform_measure(0.0, SPAN, n)
    nu = reverse_construct_nu(f, g, mu).as_density_sampled()
    k1 = rng.uniform(1.0, 9.0)
    k2 = rng.uniform(-2.0, k1 - 0.05)
    return mu, nu, k1, k2, kind
