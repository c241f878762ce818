"""One-dimensional integrable measures, put potentials and convex-order tools.

A Measure is a finite grid of atoms.  Two kinds are distinguished:

* ``atomic-grid``: the atoms are the measure.  CDF is a step function, the
  put potential is an exact atomic sum.
* ``density-sampled``: the grid approximates a continuous density.  The
  measure carries cell boundaries and is evaluated through a continuous
  piecewise-linear CDF that passes through the cell boundaries and is bent
  at each atom so that every cell's linear-density mean equals the atom
  location.  This keeps atomic and interpolated barycentres identical and
  makes put potentials exact for uniform laws.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BarycentreMismatch,
    ConvexOrderViolated,
    InvalidInput,
    NonConvexCurve,
)

MASS_TOL = 1e-10
D_TOL = 1e-10


class Measure:
    def __init__(self, points, weights, kind="atomic-grid", boundaries=None):
        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if points.ndim != 1 or points.shape != weights.shape:
            raise InvalidInput("points and weights must be 1-d arrays of equal length")
        if points.size == 0:
            raise InvalidInput("empty measure")
        if np.any(np.diff(points) <= 0):
            raise InvalidInput("points must be strictly increasing")
        if np.any(weights < 0):
            raise InvalidInput("weights must be nonnegative")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(weights)):
            raise InvalidInput("non-finite entries")
        if kind not in ("atomic-grid", "density-sampled"):
            raise InvalidInput(f"unknown kind {kind!r}")
        self.points = points
        self.weights = weights
        self.kind = kind
        self._cumw = np.concatenate([[0.0], np.cumsum(weights)])
        self._cumwx = np.concatenate([[0.0], np.cumsum(weights * points)])
        self.total_mass = float(self._cumw[-1])
        if self.total_mass <= 0:
            raise InvalidInput("zero-mass measure")
        self.mean = float(self._cumwx[-1] / self.total_mass)

        if kind == "density-sampled":
            if boundaries is None:
                boundaries = self._default_boundaries(points)
            boundaries = np.asarray(boundaries, dtype=float)
            if boundaries.size != points.size + 1:
                raise InvalidInput("need len(points)+1 boundaries")
            if np.any(np.diff(boundaries) <= 0):
                raise InvalidInput("boundaries must be strictly increasing")
            if np.any(points <= boundaries[:-1]) or np.any(points >= boundaries[1:]):
                raise InvalidInput("each point must lie strictly inside its cell")
            self.boundaries = boundaries
            self._build_nodes()
        else:
            self.boundaries = None
            self._cx = None

    @staticmethod
    def _default_boundaries(points):
        mids = 0.5 * (points[:-1] + points[1:])
        if points.size == 1:
            h = 0.5
            return np.array([points[0] - h, points[0] + h])
        lo = points[0] - (mids[0] - points[0])
        hi = points[-1] + (points[-1] - mids[-1])
        return np.concatenate([[lo], mids, [hi]])

    def _build_nodes(self):
        # CDF nodes interleave boundaries and atoms; the split fraction at the
        # atom is chosen so the cell's piecewise-uniform mean equals the atom.
        n = self.points.size
        cx = np.empty(2 * n + 1)
        cc = np.empty(2 * n + 1)
        cx[0::2] = self.boundaries
        cx[1::2] = self.points
        b0, b1 = self.boundaries[:-1], self.boundaries[1:]
        alpha = (b1 - self.points) / (b1 - b0)
        cc[0::2] = self._cumw
        cc[1::2] = self._cumw[:-1] + alpha * self.weights
        self._cx = cx
        self._cc = cc
        dx = np.diff(cx)
        self._cP = np.concatenate([[0.0], np.cumsum(dx * 0.5 * (cc[:-1] + cc[1:]))])
        dc = np.diff(cc)
        self._cJ = np.concatenate([[0.0], np.cumsum(dc * 0.5 * (cx[:-1] + cx[1:]))])

    # support endpoints
    @property
    def support_left(self):
        if self.kind == "density-sampled":
            i = np.nonzero(self.weights > 0)[0][0]
            return float(self.boundaries[i])
        return float(self.points[np.nonzero(self.weights > 0)[0][0]])

    @property
    def support_right(self):
        if self.kind == "density-sampled":
            i = np.nonzero(self.weights > 0)[0][-1]
            return float(self.boundaries[i + 1])
        return float(self.points[np.nonzero(self.weights > 0)[0][-1]])

    # CDF / partial moments -------------------------------------------------
    def cdf(self, x):
        """F(x); right-continuous for atomic grids, continuous otherwise."""
        if self.kind == "density-sampled":
            return np.interp(x, self._cx, self._cc)
        idx = np.searchsorted(self.points, x, side="right")
        return self._cumw[idx]

    def cdf_left(self, x):
        if self.kind == "density-sampled":
            return self.cdf(x)
        idx = np.searchsorted(self.points, x, side="left")
        return self._cumw[idx]

    def partial_moment(self, x):
        """J(x) = integral of z dF over (-inf, x]."""
        if self.kind == "density-sampled":
            x = np.asarray(x, dtype=float)
            k = np.clip(np.searchsorted(self._cx, x, side="right") - 1, 0, len(self._cx) - 2)
            c = np.interp(x, self._cx, self._cc)
            out = self._cJ[k] + (c - self._cc[k]) * 0.5 * (self._cx[k] + np.minimum(np.maximum(x, self._cx[0]), self._cx[-1]))
            return out if out.ndim else float(out)
        idx = np.searchsorted(self.points, x, side="right")
        return self._cumwx[idx]

    def density(self, x):
        """Piecewise-constant density of the interpolated CDF (density-sampled only).

        Returns 0 outside the support; at an interior node the right-hand
        value is used.
        """
        if self.kind != "density-sampled":
            raise InvalidInput("density only defined for density-sampled measures")
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self._cx, x, side="right") - 1, 0, len(self._cx) - 2)
        dx = self._cx[k + 1] - self._cx[k]
        rho = (self._cc[k + 1] - self._cc[k]) / dx
        rho = np.where((x < self._cx[0]) | (x >= self._cx[-1]), 0.0, rho)
        return rho if rho.ndim else float(rho)

    def put(self, k):
        """P(k) = integral of (k - z)^+ against the measure."""
        if self.kind == "density-sampled":
            k_arr = np.asarray(k, dtype=float)
            lo, hi = self._cx[0], self._cx[-1]
            kk = np.minimum(np.maximum(k_arr, lo), hi)
            j = np.clip(np.searchsorted(self._cx, kk, side="right") - 1, 0, len(self._cx) - 2)
            c = np.interp(kk, self._cx, self._cc)
            base = self._cP[j] + (kk - self._cx[j]) * 0.5 * (self._cc[j] + c)
            out = base + np.maximum(k_arr - hi, 0.0) * self.total_mass
            return out if out.ndim else float(out)
        idx = np.searchsorted(self.points, k, side="left")
        val = np.asarray(k) * self._cumw[idx] - self._cumwx[idx]
        return val if val.ndim else float(val)

    def as_density_sampled(self, boundaries=None):
        if self.kind == "density-sampled":
            return self
        return Measure(self.points, self.weights, kind="density-sampled", boundaries=boundaries)

    def to_dict(self):
        d = {"points": self.points.tolist(), "weights": self.weights.tolist(), "kind": self.kind}
        if self.boundaries is not None:
            d["boundaries"] = self.boundaries.tolist()
        return d

    def __repr__(self):
        return (f"Measure(n={self.points.size}, kind={self.kind!r}, "
                f"mass={self.total_mass:.6g}, mean={self.mean:.6g})")


# ---------------------------------------------------------------------------
# parametric constructors


def uniform_measure(a, b, n=1000):
    if not b > a:
        raise InvalidInput("need a < b")
    boundaries = np.linspace(a, b, n + 1)
    points = 0.5 * (boundaries[:-1] + boundaries[1:])
    weights = np.full(n, 1.0 / n)
    return Measure(points, weights, kind="density-sampled", boundaries=boundaries)


def mixture_uniform_measure(blocks, n=1000):
    """Mixture of uniforms; blocks = [(a, b, mass), ...], disjoint and sorted.

    Gaps between blocks become zero-weight cells, so the support is genuinely
    disconnected.
    """
    blocks = sorted(blocks)
    total = sum(m for _, _, m in blocks)
    pts, wts, bnds = [], [], []
    prev_b = None
    for a, b, m in blocks:
        if prev_b is not None and a < prev_b:
            raise InvalidInput("blocks must be disjoint")
        if prev_b is not None and a > prev_b:
            # zero-mass gap cell between blocks
            pts.append(0.5 * (prev_b + a))
            wts.append(0.0)
            bnds.append(a)
        k = max(2, int(round(n * m / total)))
        cell = np.linspace(a, b, k + 1)
        if prev_b is None:
            bnds.append(cell[0])
        pts.extend((0.5 * (cell[:-1] + cell[1:])).tolist())
        wts.extend([m / k] * k)
        bnds.extend(cell[1:].tolist())
        prev_b = b
    return Measure(np.array(pts), np.array(wts), kind="density-sampled",
                   boundaries=np.array(bnds))


def _quantile_measure(ppf_fn, cell_mean_fn, n, tail, target_mean=None):
    u = np.linspace(tail, 1.0 - tail, n + 1)
    boundaries = ppf_fn(u)
    weights = np.full(n, 1.0 / n)
    points = cell_mean_fn(boundaries[:-1], boundaries[1:], u[:-1], u[1:])
    # clamp strictly inside cells against floating error
    eps = 1e-12 * (boundaries[-1] - boundaries[0])
    points = np.clip(points, boundaries[:-1] + eps, boundaries[1:] - eps)
    if target_mean is not None:
        points = points + (target_mean - float(np.sum(points * weights)))
        boundaries = boundaries + 0.0
    return Measure(points, weights, kind="density-sampled", boundaries=boundaries)


def normal_measure(mean, var, n=1000, tail=1e-6):
    from scipy import stats

    s = np.sqrt(var)
    dist = stats.norm(loc=mean, scale=s)

    def cell_mean(a, b, ua, ub):
        alpha, beta = (a - mean) / s, (b - mean) / s
        phi = stats.norm.pdf
        return mean + s * (phi(alpha) - phi(beta)) / (ub - ua)

    return _quantile_measure(dist.ppf, cell_mean, n, tail, target_mean=mean)


def lognormal_measure(m, s2, n=1000, tail=1e-6):
    """Lognormal with log-parameters (m, s2)."""
    from scipy import stats

    s = np.sqrt(s2)
    dist = stats.lognorm(s=s, scale=np.exp(m))
    full_mean = np.exp(m + s2 / 2.0)

    def cell_mean(a, b, ua, ub):
        phi_cdf = stats.norm.cdf
        alpha = (np.log(a) - m) / s
        beta = (np.log(b) - m) / s
        return full_mean * (phi_cdf(s - alpha) - phi_cdf(s - beta)) / (ub - ua)

    return _quantile_measure(dist.ppf, cell_mean, n, tail, target_mean=full_mean)


def measure_from_spec(spec, default_grid=1000):
    """Build a Measure from a JSON-style dict."""
    if "points" in spec:
        return Measure(spec["points"], spec["weights"], kind=spec.get("kind", "atomic-grid"),
                       boundaries=spec.get("boundaries"))
    n = int(spec.get("grid_size", default_grid))
    if "uniform" in spec:
        a, b = spec["uniform"]
        return uniform_measure(a, b, n)
    if "normal" in spec:
        m, s2 = spec["normal"]
        return normal_measure(m, s2, n)
    if "lognormal" in spec:
        m, s2 = spec["lognormal"]
        return lognormal_measure(m, s2, n)
    raise InvalidInput("unrecognized measure spec")


def measure_from_json(path, default_grid=1000):
    with open(path) as fh:
        return measure_from_spec(json.load(fh), default_grid=default_grid)


# ---------------------------------------------------------------------------
# put curves


@dataclass
class PutCurve:
    label: str
    strikes: np.ndarray
    prices: np.ndarray
    discount: float = 1.0

    def __post_init__(self):
        self.strikes = np.asarray(self.strikes, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        if self.strikes.ndim != 1 or self.strikes.shape != self.prices.shape:
            raise InvalidInput("strikes/prices must be 1-d arrays of equal length")
        if self.strikes.size < 3:
            raise InvalidInput("need at least 3 strikes")
        if np.any(np.diff(self.strikes) <= 0):
            raise InvalidInput("strikes must be strictly increasing")
        if self.discount <= 0:
            raise InvalidInput("discount factor must be positive")
        if np.any(self.prices < -1e-12):
            raise NonConvexCurve(f"{self.label}: negative prices")
        if np.any(np.diff(self.prices) < -1e-10):
            raise NonConvexCurve(f"{self.label}: prices decrease in strike")
        slopes = np.diff(self.prices) / np.diff(self.strikes)
        if np.any(np.diff(slopes) < -1e-10):
            raise NonConvexCurve(f"{self.label}: curve not convex")
        if slopes.size and slopes[-1] > 1.0 + 1e-8:
            raise NonConvexCurve(f"{self.label}: final slope exceeds 1")


def measure_from_put_curve(curve: PutCurve) -> Measure:
    k = curve.strikes / curve.discount
    p = curve.prices
    if p[0] > 1e-9:
        raise InvalidInput(
            f"{curve.label}: nonzero price at the first strike; mass below it is unrecoverable")
    slopes = np.diff(p) / np.diff(k)
    # left-derivative jumps of the interpolated curve are the atom weights
    w = np.diff(np.concatenate([[0.0], slopes]))
    pts, wts = [], []
    for x, wt in zip(k[:-1], w):
        if wt > 1e-14:
            pts.append(x)
            wts.append(wt)
    if not pts:
        raise InvalidInput(f"{curve.label}: no mass recovered from curve")
    return Measure(np.array(pts), np.array(wts), kind="atomic-grid")


def measures_from_put_curves(c1: PutCurve, c2: PutCurve):
    mu = measure_from_put_curve(c1)
    nu = measure_from_put_curve(c2)
    verdict = check_convex_order(mu, nu)
    if not verdict.holds:
        raise ConvexOrderViolated(
            f"recovered measures not in convex order (fails at k={verdict.fails_at})",
            fails_at=verdict.fails_at)
    return mu, nu


# ---------------------------------------------------------------------------
# potentials and convex order


def put_value(eta: Measure, k) -> float:
    return eta.put(k)


def d_function(mu: Measure, nu: Measure, k, tol=MASS_TOL):
    if abs(mu.total_mass - nu.total_mass) > tol:
        raise BarycentreMismatch("total masses differ")
    if abs(mu.mean - nu.mean) > tol * max(1.0, abs(mu.mean)):
        raise BarycentreMismatch("barycentres differ")
    return nu.put(k) - mu.put(k)


@dataclass(frozen=True)
class ConvexOrderVerdict:
    holds: bool
    fails_at: float | None
    min_d: float

    def __bool__(self):
        return self.holds


def _joint_grid(mu: Measure, nu: Measure):
    parts = []
    for eta in (mu, nu):
        parts.append(eta.points)
        if eta.kind == "density-sampled":
            parts.append(eta.boundaries)
    grid = np.unique(np.concatenate(parts))
    if grid.size > 1:
        # collapse float-jitter duplicates
        eps = 1e-9 * (grid[-1] - grid[0] + 1.0)
        keep = np.concatenate([[True], np.diff(grid) > eps])
        grid = grid[keep]
    return grid


def check_convex_order(mu: Measure, nu: Measure, tol=D_TOL) -> ConvexOrderVerdict:
    scale = max(nu.total_mass, 1e-30)
    if abs(mu.total_mass - nu.total_mass) > MASS_TOL * max(1.0, scale):
        return ConvexOrderVerdict(False, None, -np.inf)
    if abs(mu.mean - nu.mean) > MASS_TOL * max(1.0, abs(mu.mean)):
        return ConvexOrderVerdict(False, None, -np.inf)
    grid = _joint_grid(mu, nu)
    d = nu.put(grid) - mu.put(grid)
    i = int(np.argmin(d))
    min_d = float(d[i])
    if min_d < -tol * scale:
        return ConvexOrderVerdict(False, float(grid[i]), min_d)
    return ConvexOrderVerdict(True, None, min_d)


@dataclass
class ExcessStructure:
    irreducible: list = field(default_factory=list)
    excess: list = field(default_factory=list)


def _runs(mask):
    """Maximal runs of True in a boolean array, as (start, stop) index pairs."""
    out = []
    start = None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            out.append((start, i))
            start = None
    if start is not None:
        out.append((start, len(mask)))
    return out


def irreducible_components(mu: Measure, nu: Measure, tol=D_TOL) -> ExcessStructure:
    verdict = check_convex_order(mu, nu, tol=tol)
    if not verdict.holds:
        raise ConvexOrderViolated(
            f"convex order fails at k={verdict.fails_at}", fails_at=verdict.fails_at)
    grid = _joint_grid(mu, nu)
    scale = max(nu.total_mass, 1e-30)
    d = nu.put(grid) - mu.put(grid)
    pos = d > tol * scale
    comps = []
    for s, e in _runs(pos):
        lo = grid[s - 1] if s > 0 else grid[0]
        hi = grid[e] if e < len(grid) else grid[-1]
        comps.append((float(lo), float(hi)))
    # excess intervals: where the mu density exceeds the nu density,
    # i.e. D' = F_nu - F_mu strictly decreases
    dx = np.diff(grid)
    dens_mu = np.diff(mu.cdf(grid)) / dx
    dens_nu = np.diff(nu.cdf(grid)) / dx
    span = grid[-1] - grid[0]
    thresh = 1e-8 * scale / max(span, 1e-30)
    exc_mask = (dens_mu - dens_nu) > thresh
    excess = []
    for s, e in _runs(exc_mask):
        excess.append((float(grid[s]), float(grid[e])))
    return ExcessStructure(irreducible=comps, excess=excess)


def restrict(eta: Measure, c, d):
    """Split eta into its part on the open interval (c, d) and the remainder."""
    if not c < d:
        raise InvalidInput("need c < d")
    inside = (eta.points > c) & (eta.points < d)
    def _mk(mask):
        if not np.any(mask & (eta.weights > 0)):
            return None
        return Measure(eta.points[mask], eta.weights[mask], kind="atomic-grid")
    return _mk(inside), _mk(~inside)
