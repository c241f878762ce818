"""Left-curtain martingale coupling: construction and materialization.

The coupling is represented by two functions f(x) <= x <= g(x).  The sweep
solves, for each abscissa x, the mass and first-moment balance

    mu((f, x])  =  nu((f, g))  (+ atom fractions at f and g)
    int_f^x z mu(dz)  =  int_(f,g) z nu(dz)  (+ f.lam_f + g.lam_g)

with f and g parametrized by positions on the completed CDF graph of nu: a
monotone polyline in (y, F) space.  Vertical pieces of that polyline are
nu-atoms (partial heights are the atom fractions), horizontal pieces are
nu-null gaps.  This makes the two residuals continuous in the unknowns for
every measure kind, so one solver covers the continuous, atomic and gap
cases alike.
"""

from __future__ import annotations

import bisect as _bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvexOrderViolated,
    InvalidInput,
    MonotonicityViolated,
    NoConvergence,
    DispersionViolated,
    ResidualTooLarge,
)
from .measures import Measure, check_convex_order

T_TOL = 1e-13
NEWTON_MAX = 40


class MonotonePath:
    """Completed CDF graph of a measure: polyline nondecreasing in both axes."""

    def __init__(self, vy, vc):
        vy = np.asarray(vy, dtype=float)
        vc = np.asarray(vc, dtype=float)
        keep = np.concatenate([[True], (np.diff(vy) > 0) | (np.diff(vc) > 0)])
        self.vy = vy[keep]
        self.vc = vc[keep]
        self.dy = np.diff(self.vy)
        self.dc = np.diff(self.vc)
        if np.any(self.dy < 0) or np.any(self.dc < 0):
            raise InvalidInput("path must be monotone in both coordinates")
        self.nseg = len(self.vy) - 1
        # cumulative int y dF along the path (only c-varying pieces contribute)
        self.vJ = np.concatenate(
            [[0.0], np.cumsum(self.dc * 0.5 * (self.vy[:-1] + self.vy[1:]))])

    @classmethod
    def from_measure(cls, eta: Measure):
        if eta.kind == "density-sampled":
            return cls(eta._cx, eta._cc)
        n = eta.points.size
        vy = np.repeat(eta.points, 2)[:-1]
        cum = eta._cumw
        vc = np.empty(2 * n - 1)
        vc[0::2] = cum[:-1]
        vc[1::2] = cum[1:-1] if n > 1 else []
        # vertices: (p0,0),(p0,W0),(p1,W0),(p1,W1),...
        vy = np.empty(2 * n)
        vc = np.empty(2 * n)
        vy[0::2] = eta.points
        vy[1::2] = eta.points
        vc[0] = 0.0
        vc[1::2] = cum[1:]
        if n > 1:
            vc[2::2] = cum[1:-1]
        return cls(vy, vc)

    def seg(self, t):
        k = int(t)
        if k >= self.nseg:
            k = self.nseg - 1
        if k < 0:
            k = 0
        return k

    def eval(self, t):
        """(y, c, J) at path parameter t in [0, nseg]."""
        k = self.seg(t)
        u = t - k
        y = self.vy[k] + u * self.dy[k]
        c = self.vc[k] + u * self.dc[k]
        J = self.vJ[k] + u * self.dc[k] * 0.5 * (self.vy[k] + y)
        return y, c, J

    def slopes(self, t):
        k = self.seg(t)
        return self.dy[k], self.dc[k]

    def t_from_y(self, y, side="left"):
        if y <= self.vy[0]:
            return 0.0
        if y >= self.vy[-1]:
            return float(self.nseg)
        if side == "left":
            k = int(np.searchsorted(self.vy, y, side="left"))
            # first attainment: interpolate on segment k-1
            k -= 1
            if self.dy[k] == 0:
                return float(k + 1) if self.vy[k] < y else float(k)
            return k + (y - self.vy[k]) / self.dy[k]
        k = int(np.searchsorted(self.vy, y, side="right")) - 1
        if k >= self.nseg:
            return float(self.nseg)
        if self.dy[k] == 0:
            return float(k)
        return k + (y - self.vy[k]) / self.dy[k]

    def t_from_c(self, c, side="left"):
        if c <= self.vc[0]:
            return 0.0
        if c >= self.vc[-1]:
            return float(self.nseg)
        if side == "left":
            k = int(np.searchsorted(self.vc, c, side="left")) - 1
            if self.dc[k] == 0:
                return float(k + 1) if self.vc[k] < c else float(k)
            return k + (c - self.vc[k]) / self.dc[k]
        k = int(np.searchsorted(self.vc, c, side="right")) - 1
        if k >= self.nseg:
            return float(self.nseg)
        if self.dc[k] == 0:
            return float(k)
        return k + (c - self.vc[k]) / self.dc[k]


@dataclass
class LeftCurtainMap:
    xs: np.ndarray
    fs: np.ndarray
    gs: np.ndarray
    lam_f: np.ndarray
    lam_g: np.ndarray
    diag: np.ndarray
    tfs: np.ndarray
    tgs: np.ndarray
    f_jumps: list          # (x'', f(x''-), f(x''+))
    g_jumps: list          # (xhat, g(xhat-), g(xhat+))
    regen_pairs: list      # (f', x', t_low, t_high) path coordinates of the pair
    l_mu: float
    r_mu: float
    l_nu: float
    r_nu: float
    solver: object = None

    # -- queries ------------------------------------------------------------
    def _interp_with_jumps(self, x, values, jumps, side):
        xs = self.xs
        for (xj, v_minus, v_plus) in jumps:
            if abs(x - xj) <= 1e-12 * (1.0 + abs(xj)):
                return v_minus if side == "left" else v_plus
        i = int(np.searchsorted(xs, x))
        if i == 0:
            return float(values[0])
        if i >= len(xs):
            return float(values[-1])
        x0, x1 = xs[i - 1], xs[i]
        for (xj, v_minus, v_plus) in jumps:
            if x0 < xj < x1:
                if x < xj:
                    x1, v1, v0 = xj, v_minus, values[i - 1]
                    return float(v0 + (x - x0) * (v1 - v0) / (x1 - x0))
                x0, v0, v1 = xj, v_plus, values[i]
                return float(v0 + (x - x0) * (v1 - v0) / (x1 - x0))
        v0, v1 = values[i - 1], values[i]
        if x1 == x0:
            return float(v1)
        return float(v0 + (x - x0) * (v1 - v0) / (x1 - x0))

    def f_at(self, x, side="left"):
        if x <= self.l_mu or x >= self.r_nu:
            return float(x)
        if x > self.r_mu:
            return self.l_nu
        return self._interp_with_jumps(x, self.fs, self.f_jumps, side)

    def g_at(self, x, side="left"):
        if x <= self.l_mu or x >= self.r_nu:
            return float(x)
        if x > self.r_mu:
            return self.r_nu
        return self._interp_with_jumps(x, self.gs, self.g_jumps, side)

    def g_inv(self, k):
        """Smallest x with g(x) >= k."""
        if k <= self.l_mu:
            return float(k)
        if k > self.gs[-1]:
            if k <= self.r_nu:
                return self.r_mu
            return float(k)
        i = int(np.searchsorted(self.gs, k, side="left"))
        if i == 0:
            return float(self.xs[0])
        g0, g1 = self.gs[i - 1], self.gs[i]
        x0, x1 = self.xs[i - 1], self.xs[i]
        for (xj, gm, gp) in self.g_jumps:
            if x0 <= xj <= x1 and gm <= k <= gp:
                return float(xj)
        if g1 == g0:
            return float(x1)
        return float(x0 + (k - g0) * (x1 - x0) / (g1 - g0))

    def triple_at(self, x, side="left"):
        """Exact (f, x, g) solve at an arbitrary abscissa.

        Returns a dict with f, g, lam_f, lam_g and the graph coordinate c_f
        (the nu-CDF level below which mass is mapped under f).
        """
        if self.solver is None:
            f = self.f_at(x, side=side)
            g = self.g_at(x, side=side)
            return {"f": f, "g": g, "lam_f": 0.0, "lam_g": 0.0,
                    "c_f": None, "diag": abs(g - x) < 1e-12}
        return self.solver.triple_at(x, side=side)


def coupling_kernel(map_: LeftCurtainMap, x, side="left"):
    """Two-point law [(y, mass), ...] of the coupling at x."""
    f = map_.f_at(x, side=side)
    g = map_.g_at(x, side=side)
    if (g - x) <= 0 or (x - f) <= 0:
        return [(float(x), 1.0)]
    w_f = (g - x) / (g - f)
    return [(float(f), w_f), (float(g), 1.0 - w_f)]


# ---------------------------------------------------------------------------
# solver


class CurtainSolver:
    def __init__(self, mu: Measure, nu: Measure, mass_tol=1e-12, mean_tol=None):
        self.mu = mu
        self.nu = nu
        self.path = MonotonePath.from_measure(nu)
        span = max(nu.support_right - nu.support_left, 1.0)
        self.span = span
        self.mass_atol = mass_tol * max(1.0, mu.total_mass) * 1e-1
        self.mean_atol = (mean_tol if mean_tol is not None else mass_tol) * span * 1e-1
        self.closed = []   # sorted list of (ta, tb, ylo, yhi)
        self._closed_starts = []
        # horizontal path segments (nu-null gaps) are rare; scan them once
        self._null_gaps = [k for k in range(self.path.nseg)
                           if self.path.dc[k] <= 0 and self.path.dy[k] > 0]
        # during an open excursion f stays at or below the opening point;
        # capping the f search there keeps the mass residual monotone in tf
        self.f_cap = float("inf")

    # closed-interval snapping ---------------------------------------------
    def _snap(self, t):
        # closed intervals can nest (a gap consumed inside a later, larger
        # closure), so walk every candidate with start below t and re-resolve
        # after each snap until t sits outside all of them
        i = _bisect.bisect_right(self._closed_starts, t) - 1
        while i >= 0:
            ta, tb, _, _ = self.closed[i]
            if ta < t < tb:
                t = ta
                i = _bisect.bisect_right(self._closed_starts, t) - 1
            else:
                i -= 1
        return t

    def _add_closed(self, ta, tb, ylo, yhi):
        self.closed.append((ta, tb, ylo, yhi))
        self.closed.sort()
        self._closed_starts = [c[0] for c in self.closed]

    # residuals -------------------------------------------------------------
    def _resid(self, x, tf, tg):
        tf = self._snap(tf)
        yf, cf, Jf = self.path.eval(tf)
        yg, cg, Jg = self.path.eval(tg)
        R1 = (self.mu.cdf(x) - self.mu.cdf(yf)) - (cg - cf)
        R2 = (self.mu.partial_moment(x) - self.mu.partial_moment(yf)) - (Jg - Jf)
        return R1, R2, yf, cf, yg, cg

    def _r1(self, Fx, cg, tf):
        tf = self._snap(tf)
        yf, cf, _ = self.path.eval(tf)
        return (Fx - self.mu.cdf(yf)) - (cg - cf)

    def solve_f(self, x, tg, hint):
        """Root of the mass equation in the f path-coordinate (increasing)."""
        Fx = self.mu.cdf(x)
        _, cg, _ = self.path.eval(tg)
        cap = min(self.path.t_from_y(x, side="left"), self.f_cap)
        hi = min(max(hint, 0.0), cap)
        lo = hi
        step = 0.25
        r_hi = self._r1(Fx, cg, hi)
        while r_hi < 0 and hi < cap:
            hi = min(cap, hi + step)
            step *= 2.0
            r_hi = self._r1(Fx, cg, hi)
        if r_hi < 0:
            return cap
        step = 0.25
        r_lo = self._r1(Fx, cg, lo)
        while r_lo > 0 and lo > 0:
            lo = max(0.0, lo - step)
            step *= 2.0
            r_lo = self._r1(Fx, cg, lo)
        if r_lo > 0:
            return 0.0
        for _ in range(200):
            if hi - lo <= T_TOL:
                break
            mid = 0.5 * (lo + hi)
            if self._r1(Fx, cg, mid) < 0:
                lo = mid
            else:
                hi = mid
        return self._snap(0.5 * (lo + hi))

    def solve_robust(self, x, tf0, tg0, tg_min=None):
        """Nested bisection: outer on the g coordinate, inner on f."""
        if tg_min is None:
            tg_min = 0.0
        lo = max(tg0, tg_min)

        def T(tg):
            tf = self.solve_f(x, tg, tf0)
            R1, R2, *_ = self._resid(x, tf, tg)
            if R1 < -100 * self.mass_atol:
                # f search capped out: this g is beyond the feasible range
                return -np.inf, tf
            return R2, tf

        t_lo, _ = T(lo)
        if t_lo < 0:
            # the g root would be below its previous value: signal to caller
            return None
        hi = lo
        step = 0.25
        while hi < self.path.nseg:
            hi = min(self.path.nseg, hi + step)
            step *= 2.0
            t_hi, _ = T(hi)
            if t_hi < 0:
                break
        else:
            t_hi = T(self.path.nseg)[0]
        if t_hi >= 0:
            # clamp at the top of the path; residual mean imbalance
            tg = float(self.path.nseg)
            tf = self.solve_f(x, tg, tf0)
            return tf, tg
        for _ in range(200):
            if hi - lo <= T_TOL:
                break
            mid = 0.5 * (lo + hi)
            t_mid, _ = T(mid)
            if t_mid >= 0:
                lo = mid
            else:
                hi = mid
        tg = 0.5 * (lo + hi)
        tf = self.solve_f(x, tg, tf0)
        return tf, tg

    def solve_newton(self, x, tf0, tg0, tg_min=0.0):
        tf, tg = self._snap(tf0), max(tg0, tg_min)
        rho = self.mu.density
        for _ in range(NEWTON_MAX):
            R1, R2, yf, cf, yg, cg = self._resid(x, tf, tg)
            if abs(R1) <= self.mass_atol and abs(R2) <= self.mean_atol:
                return tf, tg
            dyf, dcf = self.path.slopes(tf)
            dyg, dcg = self.path.slopes(tg)
            a11 = -rho(yf) * dyf + dcf          # dR1/dtf
            a12 = -dcg                           # dR1/dtg
            a21 = yf * a11                       # dR2/dtf
            a22 = -yg * dcg                      # dR2/dtg
            det = a11 * a22 - a12 * a21
            if abs(det) < 1e-300:
                return None
            dtf = (-R1 * a22 + R2 * a12) / det
            dtg = (-R2 * a11 + R1 * a21) / det
            lim = 2.0
            scale = max(abs(dtf), abs(dtg))
            if scale > lim:
                dtf *= lim / scale
                dtg *= lim / scale
            tf = self._snap(min(max(tf + dtf, 0.0), self.path.nseg, self.f_cap))
            tg = min(max(tg + dtg, tg_min), float(self.path.nseg))
        return None

    # event refinement ------------------------------------------------------
    def _closure_resid(self, x, tf_hint):
        tgc = self.path.t_from_y(x, side="left")
        _, cg, _ = self.path.eval(tgc)
        Fx = self.mu.cdf(x)
        # solve the mass equation for tf at g pinned to x
        cap = min(tgc, self.f_cap)
        hi = min(max(tf_hint, 0.0), cap)
        lo = hi
        step = 0.25
        while self._r1(Fx, cg, hi) < 0 and hi < cap:
            hi = min(cap, hi + step)
            step *= 2.0
        step = 0.25
        while self._r1(Fx, cg, lo) > 0 and lo > 0:
            lo = max(0.0, lo - step)
            step *= 2.0
        for _ in range(200):
            if hi - lo <= T_TOL:
                break
            mid = 0.5 * (lo + hi)
            if self._r1(Fx, cg, mid) < 0:
                lo = mid
            else:
                hi = mid
        tf = self._snap(0.5 * (lo + hi))
        _, R2, yf, *_ = self._resid(x, tf, tgc)
        return R2, tf, yf

    def _rho_nu(self, x):
        """Local nu density read off the path (None across an atom)."""
        t = self.path.t_from_y(x, side="left")
        k = self.path.seg(t)
        if self.path.dy[k] <= 0:
            return None
        return self.path.dc[k] / self.path.dy[k]

    def _closure_newton(self, x0, tf0):
        x, tf = x0, self._snap(tf0)
        rho = self.mu.density
        for _ in range(NEWTON_MAX):
            tg = self.path.t_from_y(x, side="left")
            R1, R2, yf, cf, yg, cg = self._resid(x, tf, tg)
            if abs(R1) <= self.mass_atol and abs(R2) <= self.mean_atol:
                return x, self._snap(tf)
            rn = self._rho_nu(x)
            if rn is None:
                return None
            dyf, dcf = self.path.slopes(self._snap(tf))
            a11 = rho(x) - rn
            a12 = -rho(yf) * dyf + dcf
            a21 = x * a11
            a22 = yf * a12
            det = a11 * a22 - a12 * a21
            if abs(det) < 1e-300:
                return None
            dx = (-R1 * a22 + R2 * a12) / det
            dtf = (-R2 * a11 + R1 * a21) / det
            if abs(dtf) > 2.0:
                sc = 2.0 / abs(dtf)
                dtf *= sc
                dx *= sc
            x += dx
            tf = self._snap(min(max(tf + dtf, 0.0), float(self.path.nseg), self.f_cap))
        return None

    def refine_closure(self, x_lo, x_hi, tf_hint):
        """First x in (x_lo, x_hi] where the excursion balances with g = x.

        While the excursion is open the pinned-g mean residual is strictly
        positive; it reaches zero exactly at the closing abscissa.  Bisect on
        that predicate, then polish with a Newton solve on (x, f) where the
        residual crosses transversally (it can instead reach zero with zero
        slope, or sit on a flat zero stretch, when the densities agree past
        the closure; the bisection boundary, snapped to a structural node if
        one is adjacent, is the answer there).
        """
        ztol = self.mean_atol * 10
        lo, hi = x_lo, x_hi
        r_lo, tf_lo, _ = self._closure_resid(x_lo, tf_hint)
        if r_lo <= ztol:
            _, tf, yf = self._closure_resid(x_lo, tf_hint)
            return x_lo, tf, yf
        for _ in range(200):
            if hi - lo <= 1e-14 * (1.0 + abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            r, tf, _ = self._closure_resid(mid, tf_hint)
            if r > ztol:
                lo = mid
                tf_hint = tf
            else:
                hi = mid
        x_star = hi
        _, tf, yf = self._closure_resid(x_star, tf_hint)
        ref = self._closure_newton(x_star, tf)
        win = 1e-4 * self.span
        if ref is not None and abs(ref[0] - x_star) <= win:
            x_star, tf = ref
        else:
            nodes = np.union1d(self.mu._cx, self.path.vy)
            i = int(np.searchsorted(nodes, x_star - 1e-9 * self.span))
            if i < len(nodes) and nodes[i] - x_star <= win:
                cand = float(nodes[i])
                r_c, tf_c, _ = self._closure_resid(cand, tf)
                if abs(r_c) <= ztol:
                    x_star, tf = cand, tf_c
        _, tf, yf = self._closure_resid(x_star, tf)
        return x_star, tf, yf

    def refine_f_jump(self, tb, x_guess, tg_guess):
        """Solve for the abscissa where f sits exactly at the top of a
        consumed interval (path coordinate tb)."""
        rho = self.mu.density
        x, tg = x_guess, tg_guess
        yf, cf, Jf = self.path.eval(tb)
        for _ in range(NEWTON_MAX):
            yg, cg, Jg = self.path.eval(tg)
            R1 = (self.mu.cdf(x) - self.mu.cdf(yf)) - (cg - cf)
            R2 = (self.mu.partial_moment(x) - self.mu.partial_moment(yf)) - (Jg - Jf)
            if abs(R1) <= self.mass_atol and abs(R2) <= self.mean_atol:
                return x, tg
            dyg, dcg = self.path.slopes(tg)
            a11 = rho(x)
            a12 = -dcg
            a21 = x * rho(x)
            a22 = -yg * dcg
            det = a11 * a22 - a12 * a21
            if abs(det) < 1e-300:
                return None
            dx = (-R1 * a22 + R2 * a12) / det
            dtg = (-R2 * a11 + R1 * a21) / det
            if abs(dtg) > 2.0:
                sc = 2.0 / abs(dtg)
                dtg *= sc
                dx *= sc
            x += dx
            tg = min(max(tg + dtg, 0.0), float(self.path.nseg))
        return None

    def refine_g_jump(self, k_vertex, x_guess, tf_guess):
        """Abscissa where g traverses a nu-null gap starting at path vertex
        k_vertex."""
        rho = self.mu.density
        cg = self.path.vc[k_vertex]
        Jg = self.path.vJ[k_vertex]
        x, tf = x_guess, self._snap(tf_guess)
        for _ in range(NEWTON_MAX):
            yf, cf, Jf = self.path.eval(self._snap(tf))
            R1 = (self.mu.cdf(x) - self.mu.cdf(yf)) - (cg - cf)
            R2 = (self.mu.partial_moment(x) - self.mu.partial_moment(yf)) - (Jg - Jf)
            if abs(R1) <= self.mass_atol and abs(R2) <= self.mean_atol:
                return x, self._snap(tf)
            dyf, dcf = self.path.slopes(self._snap(tf))
            a11 = rho(x)
            a12 = -rho(yf) * dyf + dcf
            a21 = x * rho(x)
            a22 = yf * a12
            det = a11 * a22 - a12 * a21
            if abs(det) < 1e-300:
                return None
            dx = (-R1 * a22 + R2 * a12) / det
            dtf = (-R2 * a11 + R1 * a21) / det
            if abs(dtf) > 2.0:
                sc = 2.0 / abs(dtf)
                dtf *= sc
                dx *= sc
            x += dx
            tf = min(max(tf + dtf, 0.0), float(self.path.nseg), self.f_cap)
        return None

    # lambda extraction ------------------------------------------------------
    def _lambda_f(self, tf):
        k = self.path.seg(tf)
        if self.path.dy[k] == 0 and tf > k:
            _, cf, _ = self.path.eval(tf)
            return float(self.path.vc[k + 1] - cf)
        return 0.0

    def _lambda_g(self, tg):
        k = self.path.seg(tg)
        if self.path.dy[k] == 0 and tg > k:
            _, cg, _ = self.path.eval(tg)
            return float(cg - self.path.vc[k])
        return 0.0

    # the sweep --------------------------------------------------------------
    def _diag_scan(self, x0, x1):
        """Earliest point in [x0, x1) where the mu density exceeds nu's."""
        tie = 1e-12 * max(1.0, self.mu.total_mass)
        nodes = self.mu._cx
        i0 = int(np.searchsorted(nodes, x0, side="right"))
        sub = [x0] + [float(v) for v in nodes[i0:] if v < x1] + [x1]
        for a, b in zip(sub[:-1], sub[1:]):
            if b <= a:
                continue
            dmu = self.mu.cdf(b) - self.mu.cdf(a)
            dnu = self.nu.cdf(b) - self.nu.cdf(a)
            if dmu > dnu + tie:
                return a
        return None

    def _gaps_crossed(self, t_old, t_new):
        """Horizontal path segments whose top g passed between two positions."""
        return [k for k in self._null_gaps
                if t_old < k + 1 - 1e-9 <= t_new]

    def build(self):
        mu, nu = self.mu, self.nu
        xs_in = np.concatenate([[mu.support_left], mu.points, [mu.support_right]])
        xs_in = xs_in[(xs_in >= mu.support_left) & (xs_in <= mu.support_right)]
        xs_in = np.unique(xs_in)

        rec = {"x": [], "f": [], "g": [], "lf": [], "lg": [],
               "diag": [], "tf": [], "tg": []}
        f_jumps, g_jumps, regen = [], [], []

        def record(x, f, g, lf, lg, diag, tf, tg):
            if rec["x"] and x - rec["x"][-1] <= 1e-14 * (1.0 + abs(x)):
                return
            rec["x"].append(x)
            rec["f"].append(f)
            rec["g"].append(g)
            rec["lf"].append(lf)
            rec["lg"].append(lg)
            rec["diag"].append(diag)
            rec["tf"].append(tf)
            rec["tg"].append(tg)

        mode = "diag"
        tf = tg = 0.0
        cur = float(xs_in[0])
        record(cur, cur, cur, 0.0, 0.0, True, 0.0, 0.0)

        for target in xs_in[1:]:
            target = float(target)
            guard = 0
            while cur < target:
                guard += 1
                if guard > 200:
                    raise NoConvergence("event loop stuck", at=cur)
                if mode == "diag":
                    e = self._diag_scan(cur, target)
                    if e is None:
                        t_here = self.path.t_from_y(target, side="left")
                        record(target, target, target, 0.0, 0.0, True, t_here, t_here)
                        cur = target
                        break
                    mode = "exc"
                    cur = e
                    tf = tg = self.path.t_from_y(e, side="left")
                    self.f_cap = tf
                    record(e, e, e, 0.0, 0.0, True, tf, tg)
                    continue
                # excursion step
                res = self.solve_newton(target, tf, tg, tg_min=tg)
                if res is None:
                    res = self.solve_robust(target, tf, tg, tg_min=tg)
                if res is None:
                    # g root below previous g: excursion closed inside the step
                    x_c, tf_c, yf_c = self.refine_closure(cur, target, tf)
                    if self._zero_width(cur, x_c, yf_c):
                        # grid-scale density blip: step over it as diagonal
                        t_here = self.path.t_from_y(target, side="left")
                        self.f_cap = float("inf")
                        record(target, target, target, 0.0, 0.0, True,
                               t_here, t_here)
                        mode = "diag"
                        cur = target
                        continue
                    self._finish_excursion(x_c, tf_c, yf_c, regen, record)
                    mode = "diag"
                    cur = x_c
                    continue
                tf_new, tg_new = res
                yg_new, _, _ = self.path.eval(tg_new)
                cell = self.span / max(len(xs_in), 1)
                if yg_new <= target + 1e-12 * self.span or (
                        yg_new - target < 10 * cell and self._closed_now(target, tf)):
                    x_c, tf_c, yf_c = self.refine_closure(cur, target, tf)
                    if self._zero_width(cur, x_c, yf_c):
                        t_here = self.path.t_from_y(target, side="left")
                        self.f_cap = float("inf")
                        record(target, target, target, 0.0, 0.0, True,
                               t_here, t_here)
                        mode = "diag"
                        cur = target
                        continue
                    self._finish_excursion(x_c, tf_c, yf_c, regen, record)
                    mode = "diag"
                    cur = x_c
                    continue
                yf_old, _, _ = self.path.eval(tf)
                # f-jumps over consumed intervals crossed between tf and tf_new
                for (ta, tb, ylo, yhi) in sorted(self.closed, key=lambda c: -c[0]):
                    if tf_new <= ta and tf >= tb - 1e-9:
                        ref = self.refine_f_jump(tb, 0.5 * (cur + target), tg)
                        xj = ref[0] if ref is not None else cur
                        if cur - 1e-9 <= xj <= target + 1e-9:
                            f_jumps.append((float(xj), float(yhi), float(ylo)))
                # f-jumps over nu-null, mu-null gaps crossed downward
                for k in self._null_gaps:
                    if not (tf > k + 1e-9 and tf_new <= k + 1e-9):
                        continue
                    top = min(self.path.vy[k + 1], yf_old)
                    if self.mu.cdf(top) - self.mu.cdf(self.path.vy[k]) > 100 * self.mass_atol:
                        continue
                    ref = self.refine_f_jump(float(k), 0.5 * (cur + target), tg)
                    xj = ref[0] if ref is not None else cur
                    if cur - 1e-9 <= xj <= target + 1e-9:
                        f_jumps.append((float(xj), float(min(top, xj)),
                                        float(self.path.vy[k])))
                # g-jumps: nu-null gaps crossed upward between tg and tg_new
                for k in self._gaps_crossed(tg, tg_new):
                    ref = self.refine_g_jump(k, 0.5 * (cur + target), tf)
                    xj = ref[0] if ref is not None else cur
                    if cur - 1e-9 <= xj <= target + 1e-9:
                        g_jumps.append((float(xj), float(max(self.path.vy[k], xj)),
                                        float(self.path.vy[k + 1])))
                tf, tg = tf_new, tg_new
                yf, _, _ = self.path.eval(tf)
                record(target, float(yf), float(yg_new),
                       self._lambda_f(tf), self._lambda_g(tg), False, tf, tg)
                cur = target

        self._records = rec
        return (rec, f_jumps, g_jumps, regen)

    def _zero_width(self, cur, x_c, yf_c):
        """Closure collapsed onto the opening point without consuming mass."""
        return (x_c <= cur + 1e-12 * self.span
                and abs(yf_c - x_c) <= 1e-9 * self.span)

    def _closed_now(self, x_hi, tf_hint):
        r_hi, _, _ = self._closure_resid(x_hi, tf_hint)
        return r_hi <= self.mean_atol * 10

    def _finish_excursion(self, x_c, tf_c, yf_c, regen, record):
        t_top = self.path.t_from_y(x_c, side="left")
        regen.append((float(yf_c), float(x_c), float(tf_c), float(t_top)))
        self._add_closed(tf_c, t_top, float(yf_c), float(x_c))
        self.f_cap = float("inf")
        record(x_c, x_c, x_c, 0.0, 0.0, True, t_top, t_top)

    # pointwise refinement for the pricing layer ----------------------------
    def triple_at(self, x, side="left"):
        rec = self._records
        xs = np.asarray(rec["x"])
        if side == "left":
            i = int(np.searchsorted(xs, x, side="right")) - 1
        else:
            i = int(np.searchsorted(xs, x, side="left"))
        i = min(max(i, 0), len(xs) - 1)
        if rec["diag"][i]:
            j = min(i + 1, len(xs) - 1)
            if rec["diag"][j] and (xs[i] <= x <= xs[j] or i == j):
                t_here = self.path.t_from_y(x, side="left")
                return {"f": float(x), "g": float(x), "lam_f": 0.0, "lam_g": 0.0,
                        "c_f": float(self.nu.cdf_left(x)), "diag": True}
        tf0, tg0 = rec["tf"][i], rec["tg"][i]
        j = i
        while j > 0 and not rec["diag"][j]:
            j -= 1
        saved_cap = self.f_cap
        saved_closed, saved_starts = self.closed, self._closed_starts
        if rec["diag"][j]:
            self.f_cap = self.path.t_from_y(rec["x"][j], side="left")
        else:
            self.f_cap = float("inf")
        # when x sits inside an excursion that later closed, its consumed
        # interval must not be treated as skipped mass for this solve
        keep = [c for c in self.closed if not (c[2] < x < c[3])]
        if len(keep) < len(self.closed):
            self.closed = keep
            self._closed_starts = [c[0] for c in keep]
        out = None
        try:
            res = self.solve_newton(x, tf0, tg0, tg_min=0.0)
            if res is None:
                res = self.solve_robust(x, tf0, max(tg0 - 2.0, 0.0))
            if res is not None:
                tf, tg = self._snap(res[0]), res[1]
                yf, cf, _ = self.path.eval(tf)
                yg, _, _ = self.path.eval(tg)
                out = {"f": float(yf), "g": float(yg),
                       "lam_f": self._lambda_f(tf),
                       "lam_g": self._lambda_g(tg),
                       "c_f": float(cf),
                       "diag": abs(yg - x) < 1e-12 * self.span}
        finally:
            self.f_cap = saved_cap
            self.closed, self._closed_starts = saved_closed, saved_starts
        if out is None:
            raise NoConvergence("pointwise curtain solve failed", at=x)
        return out


def _merge_jumps(jumps, span):
    """Coalesce jump records sharing one abscissa into a single jump."""
    out = []
    for (x, a, b) in sorted(jumps):
        if out and abs(x - out[-1][0]) <= 1e-10 * max(span, 1.0):
            px, pa, pb = out[-1]
            lo, hi = min(a, b, pa, pb), max(a, b, pa, pb)
            # keep orientation of the existing record
            out[-1] = (px, hi, lo) if pa > pb else (px, lo, hi)
        else:
            out.append((float(x), float(a), float(b)))
    return out


def build_left_curtain(mu: Measure, nu: Measure, max_weight_factor=5.0) -> LeftCurtainMap:
    if mu.kind == "atomic-grid":
        n = mu.points.size
        if np.max(mu.weights) > max_weight_factor / max(n, 1) * mu.total_mass:
            raise InvalidInput(
                "mu has atoms above the no-atom cap; refine the grid or use a "
                "density-sampled measure")
        mu = mu.as_density_sampled()
    verdict = check_convex_order(mu, nu)
    if not verdict.holds:
        raise ConvexOrderViolated(
            f"convex order fails at k={verdict.fails_at}", fails_at=verdict.fails_at)
    solver = CurtainSolver(mu, nu)
    rec, f_jumps, g_jumps, regen = solver.build()
    f_jumps = _merge_jumps(f_jumps, nu.support_right - nu.support_left)
    g_jumps = _merge_jumps(g_jumps, nu.support_right - nu.support_left)
    return LeftCurtainMap(
        xs=np.asarray(rec["x"]), fs=np.asarray(rec["f"]), gs=np.asarray(rec["g"]),
        lam_f=np.asarray(rec["lf"]), lam_g=np.asarray(rec["lg"]),
        diag=np.asarray(rec["diag"], dtype=bool),
        tfs=np.asarray(rec["tf"]), tgs=np.asarray(rec["tg"]),
        f_jumps=sorted(f_jumps), g_jumps=sorted(g_jumps),
        regen_pairs=sorted(regen, key=lambda r: r[1]),
        l_mu=mu.support_left, r_mu=mu.support_right,
        l_nu=nu.support_left, r_nu=nu.support_right,
        solver=solver)


# ---------------------------------------------------------------------------
# reverse construction


def _as_table(fn, xs):
    if callable(fn):
        return np.array([float(fn(x)) for x in xs])
    arr = np.asarray(fn, dtype=float)
    if arr.shape != xs.shape:
        raise InvalidInput("function table length must match the mu grid")
    return arr


def validate_monotone_pair(xs, fs, gs, tol=1e-9):
    span = max(xs[-1] - xs[0], 1.0)
    t = tol * span
    if np.any(np.diff(gs) < -t):
        raise MonotonicityViolated("g must be nondecreasing")
    if np.any(fs > xs + t) or np.any(gs < xs - t):
        raise MonotonicityViolated("need f(x) <= x <= g(x)")
    on_diag = np.abs(gs - xs) <= t
    if np.any(np.abs(fs[on_diag] - xs[on_diag]) > t):
        raise MonotonicityViolated("f(x) must equal x wherever g(x) = x")
    # no-entry: f may never re-enter an earlier open interval (f(x), g(x))
    n = len(xs)
    lower = np.tril(np.ones((n, n), dtype=bool), k=-1)  # j < i
    bad = lower & (fs[None, :].T > fs[None, :] + t) & (fs[None, :].T < gs[None, :] - t)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise MonotonicityViolated(
            f"f({xs[i]:.6g}) = {fs[i]:.6g} enters the earlier interval "
            f"({fs[j]:.6g}, {gs[j]:.6g}) at x = {xs[j]:.6g}")


def reverse_construct_nu(f, g, mu: Measure, merge_tol=1e-12) -> Measure:
    """Push mu through the two-point kernels of a monotone (f, g) pair."""
    xs = mu.points
    fs = _as_table(f, xs)
    gs = _as_table(g, xs)
    validate_monotone_pair(xs, fs, gs)
    span = max(xs[-1] - xs[0], 1.0)
    t = 1e-12 * span
    pts, wts = [], []
    for x, w, fv, gv in zip(xs, mu.weights, fs, gs):
        if w <= 0:
            continue
        if gv - x <= t or x - fv <= t:
            pts.append(x)
            wts.append(w)
        else:
            wf = (gv - x) / (gv - fv)
            pts.append(fv)
            wts.append(w * wf)
            pts.append(gv)
            wts.append(w * (1.0 - wf))
    pts = np.asarray(pts)
    wts = np.asarray(wts)
    order = np.argsort(pts, kind="stable")
    pts, wts = pts[order], wts[order]
    # merge float-coincident atoms, keeping the weighted barycentre exact
    out_p, out_w = [pts[0]], [wts[0]]
    mtol = merge_tol * span
    for p, w in zip(pts[1:], wts[1:]):
        if p - out_p[-1] <= mtol:
            tot = out_w[-1] + w
            if tot > 0:
                out_p[-1] = (out_p[-1] * out_w[-1] + p * w) / tot
            out_w[-1] = tot
        else:
            out_p.append(p)
            out_w.append(w)
    return Measure(np.asarray(out_p), np.asarray(out_w), kind="atomic-grid")


# ---------------------------------------------------------------------------
# transport plan


@dataclass
class TransportPlan:
    row_points: np.ndarray
    row_weights: np.ndarray
    col_points: np.ndarray
    col_weights: np.ndarray
    matrix: np.ndarray
    threshold_hint: float | None = None

    def row_sums(self):
        return self.matrix.sum(axis=1)

    def col_sums(self):
        return self.matrix.sum(axis=0)

    def row_mean_residuals(self):
        return self.matrix @ self.col_points - self.row_weights * self.row_points

    def max_marginal_residual(self):
        return max(float(np.max(np.abs(self.row_sums() - self.row_weights))),
                   float(np.max(np.abs(self.col_sums() - self.col_weights))))

    def max_martingale_residual(self):
        return float(np.max(np.abs(self.row_mean_residuals())))

    def validate(self, tol=1e-10):
        if np.any(self.matrix < -1e-15):
            raise ResidualTooLarge("negative plan weight")
        m = self.max_marginal_residual()
        if m > tol:
            raise ResidualTooLarge(f"marginal residual {m:.3e}")
        r = self.row_mean_residuals()
        bound = tol * np.maximum(self.row_weights, 1e-300)
        if np.any(np.abs(r) > bound):
            worst = int(np.argmax(np.abs(r) / bound))
            raise ResidualTooLarge(
                f"martingale residual {r[worst]:.3e} in row {worst}", worst_row=worst)
        return True

    def to_triplets(self):
        ii, jj = np.nonzero(self.matrix)
        return np.column_stack([ii, jj, self.matrix[ii, jj]])

    def sample(self, rng, size):
        probs = self.row_weights / self.row_weights.sum()
        rows = rng.choice(len(self.row_points), size=size, p=probs)
        xs = self.row_points[rows]
        ys = np.empty(size)
        for r in np.unique(rows):
            sel = rows == r
            p = self.matrix[r]
            tot = p.sum()
            if tot <= 0:
                ys[sel] = self.row_points[r]
                continue
            ys[sel] = rng.choice(self.col_points, size=int(sel.sum()), p=p / tot)
        return xs, ys


class _CapacityDepositor:
    """Distributes point deposits onto a fixed atom grid, preserving the mass
    and mean of every deposit exactly while never exceeding atom capacities."""

    def __init__(self, points, capacities):
        self.points = points
        self.cap = capacities.copy()
        self.weights0 = capacities.copy()
        self.n = len(points)
        # deposits may not bracket across a null gap of the target measure:
        # doing so would move mass between irreducible pieces
        self.region = np.zeros(self.n, dtype=int)
        if self.n > 1:
            gaps = np.diff(points)
            med = np.median(gaps[capacities[:-1] > 0]) if np.any(capacities[:-1] > 0) \
                else np.median(gaps)
            self.region = np.concatenate([[0], np.cumsum(gaps > 8 * max(med, 1e-300))])

    def region_of(self, y):
        j = int(np.clip(np.searchsorted(self.points, y), 0, self.n - 1))
        jl = max(j - 1, 0)
        if abs(self.points[jl] - y) <= abs(self.points[j] - y):
            j = jl
        return int(self.region[j])

    def hull_of(self, y):
        """Smallest and largest atom in y's region (capacity-weighted atoms)."""
        sel = (self.region == self.region_of(y)) & (self.weights0 > 0)
        pts = self.points[sel]
        if pts.size == 0:
            return y, y
        return float(pts[0]), float(pts[-1])

    def _avail_left(self, j, reg):
        while j >= 0 and (self.cap[j] <= 0 or self.region[j] != reg):
            j -= 1
        return j if j >= 0 and self.region[j] == reg else -1

    def _avail_right(self, j, reg):
        while j < self.n and (self.cap[j] <= 0 or self.region[j] != reg):
            j += 1
        return j if j < self.n and self.region[j] == reg else -1

    def deposit(self, y, m, out_row):
        pts = self.points
        snap = 1e-13 * (1.0 + abs(y))
        reg = self.region_of(y)
        remaining = m
        for _ in range(4 * self.n + 8):
            if remaining <= 1e-18:
                return 0.0
            jl = self._avail_left(int(np.searchsorted(pts, y, side="right")) - 1, reg)
            jr = self._avail_right(int(np.searchsorted(pts, y, side="left")), reg)
            if jl >= 0 and abs(pts[jl] - y) <= snap:
                take = min(remaining, self.cap[jl])
                out_row[jl] += take
                self.cap[jl] -= take
                remaining -= take
                continue
            if jr >= 0 and abs(pts[jr] - y) <= snap:
                take = min(remaining, self.cap[jr])
                out_row[jr] += take
                self.cap[jr] -= take
                remaining -= take
                continue
            if jl < 0 or jr < 0:
                break
            wl = (pts[jr] - y) / (pts[jr] - pts[jl])
            wr = 1.0 - wl
            take = remaining
            if wl > 0:
                take = min(take, self.cap[jl] / wl)
            if wr > 0:
                take = min(take, self.cap[jr] / wr)
            out_row[jl] += take * wl
            out_row[jr] += take * wr
            self.cap[jl] -= take * wl
            self.cap[jr] -= take * wr
            remaining -= take
        return remaining


def _plan_by_lp(targets, mu_w, nu_pts, nu_w, half_width):
    """Feasibility LP for a plan supported near the per-row target points.

    Every row gets the columns within half_width atoms of each of its target
    points; uncovered columns are attached to the row with the nearest
    target.  Constraints: row masses, row first moments, column masses.
    """
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    n, m = len(mu_w), len(nu_pts)
    cols_of = [set() for _ in range(n)]
    for i, tgts in enumerate(targets):
        for (y, _) in tgts:
            j = int(np.searchsorted(nu_pts, y))
            for jj in range(max(0, j - half_width), min(m, j + half_width)):
                cols_of[i].add(jj)
    covered = np.zeros(m, dtype=bool)
    for i in range(n):
        for j in cols_of[i]:
            covered[j] = True
    for j in np.nonzero(~covered & (nu_w > 0))[0]:
        best, best_d = 0, np.inf
        for i, tgts in enumerate(targets):
            for (y, _) in tgts:
                d = abs(y - nu_pts[j])
                if d < best_d:
                    best, best_d = i, d
        cols_of[best].add(int(j))

    var_i, var_j = [], []
    for i in range(n):
        for j in sorted(cols_of[i]):
            var_i.append(i)
            var_j.append(j)
    var_i = np.asarray(var_i)
    var_j = np.asarray(var_j)
    nv = len(var_i)
    k = np.arange(nv)
    rows_A = np.concatenate([var_i, n + var_i, 2 * n + var_j])
    cols_A = np.concatenate([k, k, k])
    vals_A = np.concatenate([np.ones(nv), nu_pts[var_j], np.ones(nv)])
    A = coo_matrix((vals_A, (rows_A, cols_A)), shape=(2 * n + m, nv)).tocsr()
    b = np.concatenate([mu_w,
                        np.array([sum(mass * y for (y, mass) in t) for t in targets]),
                        nu_w])
    res = linprog(np.zeros(nv), A_eq=A, b_eq=b, bounds=(0, None),
                  method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-9})
    if not res.success:
        return None
    x = _polish_nonneg_solution(A, b, res.x)
    if x is None:
        return None
    W = np.zeros((n, m))
    W[var_i, var_j] = x
    return W


def _polish_nonneg_solution(A, b, x, tol=5e-14, max_iter=60):
    """Drive an approximate LP solution to machine-level feasibility by
    alternating minimum-norm corrections onto the equality constraints with
    clipping to the nonnegative orthant."""
    from scipy.sparse.linalg import lsqr
    scale = max(float(np.max(np.abs(b))), 1.0)
    for _ in range(max_iter):
        r = b - A @ x
        worst = float(np.max(np.abs(r)))
        if worst <= tol * scale and float(x.min()) >= -1e-16:
            return np.maximum(x, 0.0)
        delta = lsqr(A, r, atol=1e-14, btol=1e-14, iter_lim=4000)[0]
        x = np.maximum(x + delta, 0.0)
    return None


def to_transport_plan(map_: LeftCurtainMap, mu: Measure, nu: Measure) -> TransportPlan:
    if mu.kind == "atomic-grid":
        mu = mu.as_density_sampled()
    xs = mu.points
    n, m = len(xs), len(nu.points)
    W = np.zeros((n, m))
    dep = _CapacityDepositor(nu.points, nu.weights)
    # map samples include the support endpoints; align by abscissa
    sample_idx = np.searchsorted(map_.xs, xs)
    tiny = 1e-15 * max(1.0, mu.total_mass)
    targets = []
    for i, x in enumerate(xs):
        w = mu.weights[i]
        si = int(sample_idx[i])
        if si >= len(map_.xs) or abs(map_.xs[si] - x) > 1e-9 * (1 + abs(x)):
            f, g = map_.f_at(x), map_.g_at(x)
        else:
            f, g = map_.fs[si], map_.gs[si]
        if g - x > 1e-14 * (1 + abs(x)) and x - f > 1e-14 * (1 + abs(x)):
            # clamp the lever endpoints into the atom hulls of their regions;
            # the lever weights through x keep the row mean exact
            f = min(max(f, dep.hull_of(f)[0]), x)
            g = max(min(g, dep.hull_of(g)[1]), x)
        if g - x <= 1e-14 * (1 + abs(x)) or x - f <= 1e-14 * (1 + abs(x)):
            targets.append([(float(x), float(w))])
        else:
            wf = (g - x) / (g - f)
            targets.append([(float(f), float(w * wf)),
                            (float(g), float(w * (1.0 - wf)))])
    stranded = False
    for i, tgts in enumerate(targets):
        for (y, mass) in tgts:
            if mass <= 0:
                continue
            if dep.deposit(y, mass, W[i]) > tiny:
                stranded = True
                break
        if stranded:
            break
    if stranded:
        # greedy placement starved a later row; solve the placement jointly
        for hw in (4, 12, 40):
            W_lp = _plan_by_lp(targets, mu.weights, nu.points, nu.weights, hw)
            if W_lp is not None:
                W = W_lp
                break
        else:
            raise ResidualTooLarge("no feasible plan near the coupling graph")
    return TransportPlan(row_points=xs, row_weights=mu.weights.copy(),
                         col_points=nu.points.copy(), col_weights=nu.weights.copy(),
                         matrix=W)


# ---------------------------------------------------------------------------
# ODE construction (dispersion case)


def build_by_ode(rho, eta, e_minus, r_mu, l_nu, r_nu, n_steps=2000):
    """Integrate the coupled equations for (f, g) under a single excess
    interval, starting from f = g = e_minus.

    rho, eta are density callables for mu and nu.  The singular start is
    replaced by an exact mass/mean solve one step in.
    """
    h = (r_mu - e_minus) / n_steps
    fine = 8

    # cumulative integrals of the densities
    gx = np.linspace(e_minus, r_mu, fine * n_steps + 1)
    gr = np.array([rho(v) for v in gx])
    Fr = np.concatenate([[0.0], np.cumsum(0.5 * (gr[1:] + gr[:-1]) * np.diff(gx))])
    Jr = np.concatenate([[0.0], np.cumsum(0.5 * (gr[1:] * gx[1:] + gr[:-1] * gx[:-1]) * np.diff(gx))])
    ex = np.linspace(l_nu, r_nu, 4 * fine * n_steps + 1)
    er = np.array([eta(v) for v in ex])
    Fe = np.concatenate([[0.0], np.cumsum(0.5 * (er[1:] + er[:-1]) * np.diff(ex))])
    Je = np.concatenate([[0.0], np.cumsum(0.5 * (er[1:] * ex[1:] + er[:-1] * ex[:-1]) * np.diff(ex))])

    def Frho(v):
        return float(np.interp(v, gx, Fr))

    def Jrho(v):
        return float(np.interp(v, gx, Jr))

    def Feta(v):
        return float(np.interp(v, ex, Fe))

    def Jeta(v):
        return float(np.interp(v, ex, Je))

    def init(x0):
        # solve mass/mean balance exactly at x0
        def f_of_g(gv):
            lo, hi = l_nu, min(x0, gv)
            target = Frho(x0) - (Feta(gv) - 0.0)
            # mass: Frho(x0) - Frho(f)=0 is wrong below e_-; mu has no mass
            # below e_-, so the balance is Frho(x0) = Feta(g) - Feta(f)
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if Feta(gv) - Feta(mid) > Frho(x0):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        lo, hi = x0, r_nu
        for _ in range(100):
            gv = 0.5 * (lo + hi)
            fv = f_of_g(gv)
            if (Feta(gv) - Feta(fv)) - Frho(x0) > 1e-12:
                # f pinned at its cap with mass still above target: g too high
                hi = gv
                continue
            mean_res = (Jrho(x0) - 0.0) - (Jeta(gv) - Jeta(fv)) \
                + e_minus * 0.0
            # orientation: larger g moves nu mean up
            if mean_res > 0:
                lo = gv
            else:
                hi = gv
        gv = 0.5 * (lo + hi)
        return f_of_g(gv), gv

    xs = [e_minus]
    fs = [e_minus]
    gs = [e_minus]
    x = e_minus + h
    fv, gv = init(x)
    xs.append(x)
    fs.append(fv)
    gs.append(gv)

    def rhs(x, fv, gv):
        # clamp Runge-Kutta substeps that overshoot the nu support
        fv = min(max(fv, l_nu), x)
        gv = min(max(gv, x), r_nu)
        denom_f = eta(fv) - rho(fv)
        if denom_f <= 0:
            raise DispersionViolated(
                f"eta - rho is nonpositive at f = {fv:.6g}")
        eg = eta(gv)
        if eg <= 0:
            raise DispersionViolated(f"eta vanishes at g = {gv:.6g}")
        df = -((gv - x) / (gv - fv)) * rho(x) / denom_f
        dg = ((x - fv) / (gv - fv)) * rho(x) / eg
        return df, dg

    while x < r_mu - 0.5 * h:
        k1f, k1g = rhs(x, fv, gv)
        k2f, k2g = rhs(x + 0.5 * h, fv + 0.5 * h * k1f, gv + 0.5 * h * k1g)
        k3f, k3g = rhs(x + 0.5 * h, fv + 0.5 * h * k2f, gv + 0.5 * h * k2g)
        k4f, k4g = rhs(x + h, fv + h * k3f, gv + h * k3g)
        fv += h * (k1f + 2 * k2f + 2 * k3f + k4f) / 6.0
        gv += h * (k1g + 2 * k2g + 2 * k3g + k4g) / 6.0
        x += h
        fv = max(min(fv, x), l_nu)
        gv = min(max(gv, x), r_nu)
        xs.append(x)
        fs.append(fv)
        gs.append(gv)

    xs = np.asarray(xs)
    return LeftCurtainMap(
        xs=xs, fs=np.asarray(fs), gs=np.asarray(gs),
        lam_f=np.zeros_like(xs), lam_g=np.zeros_like(xs),
        diag=np.zeros(len(xs), dtype=bool),
        tfs=np.zeros_like(xs), tgs=np.zeros_like(xs),
        f_jumps=[], g_jumps=[], regen_pairs=[],
        l_mu=e_minus, r_mu=r_mu, l_nu=l_nu, r_nu=r_nu, solver=None)
