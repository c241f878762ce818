"""Cheapest superhedge construction, costing and pathwise verification.

The hedge consists of a static time-2 convex payoff psi (a weighted sum of
put payoffs), a static time-1 payoff phi = ((K1-x)^+ - psi(x))^+ and a
forward position theta1 = -psi'_+ entered when the option is not exercised
early.  For each pricing region the generating psi has a closed form.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NotConvex, NotDominating, RegionMismatch
from .leftcurtain import LeftCurtainMap
from .measures import Measure
from .pricing import PricingSolution, RegionLabel, StrikePair

_DOM_TOL = 1e-12


@dataclass
class ConvexPayoff:
    """Nonnegative mixture of put payoffs plus an optional affine part."""

    components: list  # [(strike, weight >= 0), ...] sorted by strike
    slope: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        comps = sorted((float(k), float(w)) for (k, w) in self.components)
        if any(w < -1e-14 for (_, w) in comps):
            raise NotConvex("negative put weight")
        self.components = [(k, max(w, 0.0)) for (k, w) in comps if w > 0.0]

    def value(self, y):
        y = np.asarray(y, dtype=float)
        out = self.slope * y + self.intercept
        for (k, w) in self.components:
            out = out + w * np.maximum(k - y, 0.0)
        return out if out.ndim else float(out)

    def right_slope(self, y):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape if y.ndim else (), self.slope)
        for (k, w) in self.components:
            out = out - w * (y < k)
        return out if out.ndim else float(out)

    @property
    def strikes(self):
        return [k for (k, _) in self.components]

    @property
    def total_weight(self):
        return sum(w for (_, w) in self.components)

    def dominates_put(self, k2, tol=_DOM_TOL):
        """True when psi(y) >= (k2 - y)^+ everywhere."""
        span = 1.0 + abs(k2) + max(map(abs, self.strikes), default=0.0)
        ys = np.array(self.strikes + [k2], dtype=float)
        if np.any(self.value(ys) < np.maximum(k2 - ys, 0.0) - tol * span):
            return False
        # tails: slope at -inf must reach -1, slope at +inf must be >= 0
        if self.slope - self.total_weight > -1.0 + tol:
            return False
        return self.slope >= -tol

    def cost_under(self, nu: Measure):
        """Exact integral of the payoff against nu."""
        m0 = nu.total_mass
        m1 = m0 * nu.mean
        out = self.slope * m1 + self.intercept * m0
        for (k, w) in self.components:
            out += w * nu.put(k)
        return float(out)

    def to_json_components(self):
        return [{"strike": k, "weight": w} for (k, w) in self.components]


@dataclass
class Superhedge:
    psi: ConvexPayoff
    K: StrikePair
    x_grid: np.ndarray
    phi_table: np.ndarray
    theta1_table: np.ndarray
    cost: float = None
    diagnostics: dict = field(default_factory=dict)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        out = np.maximum(np.maximum(self.K.k1 - x, 0.0) - self.psi.value(x), 0.0)
        return out if out.ndim else float(out)

    def theta1(self, x):
        return -self.psi.right_slope(x)

    def to_dict(self):
        return {
            "psi": self.psi.to_json_components(),
            "phi_table": self.phi_table.tolist(),
            "theta1_table": self.theta1_table.tolist(),
            "cost": self.cost,
        }


# ---------------------------------------------------------------------------
# region-specific generators


def build_psi(solution: PricingSolution, map_: LeftCurtainMap, K: StrikePair) -> ConvexPayoff:
    region = solution.region
    if region in (RegionLabel.B, RegionLabel.DEG_EUROPEAN):
        return ConvexPayoff([(K.k2, 1.0)])
    if region is RegionLabel.DEG_INTRINSIC:
        l_nu, r_nu = map_.l_nu, map_.r_nu
        if l_nu <= K.k2 <= r_nu and r_nu > l_nu:
            w_hi = (K.k2 - l_nu) / (r_nu - l_nu)
            return ConvexPayoff([(l_nu, 1.0 - w_hi), (r_nu, w_hi)])
        return ConvexPayoff([(K.k2, 1.0)])
    if region is RegionLabel.R:
        f, g = solution.f_star, solution.g_star
        if f is None or g is None or g <= f:
            raise RegionMismatch("critical triple missing for region R")
        theta = (K.k2 - f) / (g - f)
        return ConvexPayoff([(f, 1.0 - theta), (g, theta)])
    if region is RegionLabel.W:
        fp = solution.aux.get("f_prime")
        xp = solution.aux.get("x_prime")
        if fp is None or xp is None or xp <= fp:
            raise RegionMismatch("regeneration pair missing for region W")
        theta = (K.k2 - fp) / (xp - fp)
        return ConvexPayoff([(fp, 1.0 - theta), (xp, theta)])
    if region is RegionLabel.G:
        fp = solution.aux.get("f_prime")
        xp = solution.aux.get("x_prime")
        xdp = solution.aux.get("x_dprime")
        if fp is None or xp is None or xdp is None:
            raise RegionMismatch("jump data missing for region G")
        g2 = map_.g_at(xdp, side="right")
        theta2 = (K.k1 - xdp) / (g2 - xdp)
        delta2_xp = (g2 - xp) * theta2
        theta1 = (K.k2 - fp - delta2_xp) / (xp - fp)
        return ConvexPayoff([(fp, 1.0 - theta1), (xp, theta1 - theta2), (g2, theta2)])
    raise RegionMismatch(f"unknown region {region}")


def superhedge_from_psi(psi: ConvexPayoff, K: StrikePair, x_grid) -> Superhedge:
    x_grid = np.asarray(x_grid, dtype=float)
    if not psi.dominates_put(K.k2):
        raise NotDominating("psi does not dominate the time-2 payoff")
    h = Superhedge(psi, K, x_grid, None, None)
    h.phi_table = h.phi(x_grid)
    h.theta1_table = -psi.right_slope(x_grid)
    _verify_corners(h, K)
    return h


def _corner_points(h: Superhedge, K: StrikePair):
    ks = h.psi.strikes
    xs = np.unique(np.concatenate([h.x_grid, ks, [K.k1, K.k2]]))
    ys = np.unique(np.array(ks + [K.k1, K.k2], dtype=float))
    return xs, ys


def _verify_corners(h: Superhedge, K: StrikePair, tol=1e-10):
    xs, ys = _corner_points(h, K)
    rep = verify_pathwise(h, (np.repeat(xs, ys.size), np.tile(ys, xs.size)), K, tol=tol)
    # the time-1 inequality is tightest at y = x
    rep_d = verify_pathwise(h, (xs, xs), K, tol=tol)
    if rep["violations"] or rep_d["violations"]:
        worst = min(rep["worst_margin"], rep_d["worst_margin"])
        raise NotDominating(f"superhedge inequality fails by {worst:.3e}")
    h.diagnostics["corner_margin"] = min(rep["worst_margin"], rep_d["worst_margin"])
    return h


# ---------------------------------------------------------------------------
# costing


def _call_value(eta: Measure, k):
    m0 = eta.total_mass
    m1 = m0 * eta.mean
    return eta.put(k) + m1 - k * m0


def _excess(psi, K, x):
    return (K.k1 - x if x < K.k1 else 0.0) - psi.value(x)


def _phi_kinks(psi: ConvexPayoff, K: StrikePair):
    """Breakpoints of phi with its left-ray slope.

    Returns (kinks, left_slope): psi kinks, K1, interior sign changes of
    (K1-x)^+ - psi(x), and the analytic crossing on the leftmost ray.
    """
    base = sorted(set(psi.strikes + [K.k1]))
    kinks = list(base)
    for (a, b) in zip(base[:-1], base[1:]):
        ha, hb = _excess(psi, K, a), _excess(psi, K, b)
        if (ha > 0) != (hb > 0) and ha != hb:
            kinks.append(a + (b - a) * ha / (ha - hb))
    # leftmost ray: h(x) = h(k0) + s (x - k0) with s the slope of a - psi there
    k0 = base[0]
    s = psi.total_weight - psi.slope - 1.0
    h0 = _excess(psi, K, k0)
    left_slope = 0.0
    if s > 1e-14 and h0 > 0:
        kinks.append(k0 - h0 / s)          # phi vanishes left of this point
    elif s < -1e-14:
        if h0 < 0:
            kinks.append(k0 - h0 / s)      # phi turns on left of this point
        left_slope = s
    return sorted(set(kinks)), left_slope


def integrate_piecewise_linear(eta: Measure, kinks, values, left_slope, right_slope):
    """Exact integral against eta of the PL function with the given graph."""
    kinks = np.asarray(kinks, dtype=float)
    values = np.asarray(values, dtype=float)
    m0 = eta.total_mass
    m1 = m0 * eta.mean
    # base ray extended from the leftmost kink
    total = values[0] * m0 + left_slope * (m1 - kinks[0] * m0)
    slopes = np.empty(kinks.size + 1)
    slopes[0] = left_slope
    slopes[-1] = right_slope
    if kinks.size > 1:
        slopes[1:-1] = np.diff(values) / np.diff(kinks)
    for i, k in enumerate(kinks):
        total += (slopes[i + 1] - slopes[i]) * _call_value(eta, k)
    return float(total)


def integrate_phi(h: Superhedge, mu: Measure):
    kinks, left_slope = _phi_kinks(h.psi, h.K)
    vals = h.phi(np.asarray(kinks))
    return integrate_piecewise_linear(mu, kinks, vals, left_slope, 0.0)


def hedge_cost(h: Superhedge, mu: Measure, nu: Measure, discrete=False):
    """Cost of the hedge: integral of phi against mu plus psi against nu."""
    if discrete:
        phi_part = float(np.dot(mu.weights, h.phi(mu.points)))
        psi_part = float(np.dot(nu.weights, h.psi.value(nu.points)))
        return phi_part + psi_part
    return integrate_phi(h, mu) + h.psi.cost_under(nu)


# ---------------------------------------------------------------------------
# verification


def verify_pathwise(h: Superhedge, pairs, K: StrikePair, tol=1e-9):
    """Check both superhedge inequalities on (x, y) pairs."""
    if isinstance(pairs, tuple):
        x, y = pairs
    else:
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        x, y = arr[:, 0], arr[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = h.phi(x)
    psi_y = h.psi.value(y)
    th1 = -h.psi.right_slope(x)
    a = np.maximum(K.k1 - x, 0.0)
    b = np.maximum(K.k2 - y, 0.0)
    margin_a = phi + psi_y + th1 * (y - x) - a
    margin_b = phi + psi_y - b
    worst = float(min(margin_a.min(), margin_b.min())) if x.size else 0.0
    bad = int(np.sum(margin_a < -tol) + np.sum(margin_b < -tol))
    k = int(np.argmin(np.minimum(margin_a, margin_b))) if x.size else -1
    return {
        "n_pairs": int(x.size),
        "violations": bad,
        "worst_margin": worst,
        "worst_pair": (float(x[k]), float(y[k])) if k >= 0 else None,
    }


def duality_gap(solution: PricingSolution, h: Superhedge, mu: Measure, nu: Measure):
    return hedge_cost(h, mu, nu) - solution.price


def build_superhedge(solution: PricingSolution, map_: LeftCurtainMap,
                     mu: Measure, nu: Measure, K: StrikePair) -> Superhedge:
    """Convenience wrapper: generate psi, assemble and cost the hedge."""
    psi = build_psi(solution, map_, K)
    h = superhedge_from_psi(psi, K, mu.points)
    h.cost = hedge_cost(h, mu, nu)
    return h
