"""Brute-force linear-programming bound on the two-date American put.

The LP relaxes the exercise rule: each time-1 atom x_i may split its mass
between stopping (variables q[i, j]) and continuing (variables r[i, j]),
with both sub-couplings required to keep conditional mean x_i and to glue
into the prescribed marginals.  The optimal value brackets the constructed
price from above the plan evaluation and below the hedge cost, giving an
independent duality certificate.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import Infeasible, NumericalBreakdown, SizeCap, Unbounded
from .measures import Measure
from .pricing import StrikePair

DEFAULT_CELL_CAP = 200 * 200
_DENSE_LIMIT = 6000  # 2*n*m above this delegates to the sparse solver


@dataclass
class RelaxedPrimalLP:
    x: np.ndarray
    mu_w: np.ndarray
    y: np.ndarray
    nu_w: np.ndarray
    K: StrikePair

    def __post_init__(self):
        self.n = self.x.size
        self.m = self.y.size

    @property
    def n_vars(self):
        return 2 * self.n * self.m

    @property
    def n_rows(self):
        return 3 * self.n + self.m

    def objective(self):
        """Coefficients for (q, r) flattened row-major, to be maximized."""
        a = np.maximum(self.K.k1 - self.x, 0.0)
        b = np.maximum(self.K.k2 - self.y, 0.0)
        cq = np.repeat(a, self.m)
        cr = np.tile(b, self.n)
        return np.concatenate([cq, cr])

    def constraints(self):
        """Sparse equality system A z = rhs over z = (q, r)."""
        n, m, nm = self.n, self.m, self.n * self.m
        rows, cols, vals = [], [], []

        def add(block_row, var_offset, i, j, v):
            rows.append(block_row)
            cols.append(var_offset + i * m + j)
            vals.append(v)

        ii = np.arange(n * m) // m
        jj = np.arange(n * m) % m
        # row-marginal: sum_j q_ij + r_ij = mu_i
        rows.extend(ii); cols.extend(np.arange(nm)); vals.extend(np.ones(nm))
        rows.extend(ii); cols.extend(nm + np.arange(nm)); vals.extend(np.ones(nm))
        # column-marginal: sum_i q_ij + r_ij = nu_j
        rows.extend(n + jj); cols.extend(np.arange(nm)); vals.extend(np.ones(nm))
        rows.extend(n + jj); cols.extend(nm + np.arange(nm)); vals.extend(np.ones(nm))
        # conditional-martingale rows for q and for r
        dev = (self.y[jj] - self.x[ii])
        rows.extend(n + m + ii); cols.extend(np.arange(nm)); vals.extend(dev)
        rows.extend(2 * n + m + ii); cols.extend(nm + np.arange(nm)); vals.extend(dev)
        A = sp.coo_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))
        rhs = np.concatenate([self.mu_w, self.nu_w, np.zeros(2 * n)])
        return A.tocsr(), rhs

    def dump(self):
        """Fixed-order text rendering for external cross-checks."""
        lines = ["OBJECTIVE (maximize)"]
        c = self.objective()
        lines.extend(f"  z{k} {c[k]:.17g}" for k in range(self.n_vars))
        A, rhs = self.constraints()
        lines.append("ROW BOUNDS (equalities)")
        lines.extend(f"  row{i} = {rhs[i]:.17g}" for i in range(self.n_rows))
        lines.append("COLUMN BOUNDS")
        lines.extend(f"  z{k} >= 0" for k in range(self.n_vars))
        return "\n".join(lines)


@dataclass
class LPSolution:
    status: str
    value: float = None
    q: np.ndarray = None
    r: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def to_triplets_csv(self):
        lines = ["i,j,q,r"]
        n, m = self.q.shape
        for i in range(n):
            for j in range(m):
                if self.q[i, j] > 0 or self.r[i, j] > 0:
                    lines.append(f"{i},{j},{self.q[i, j]:.17g},{self.r[i, j]:.17g}")
        return "\n".join(lines)


def build_lp(mu: Measure, nu: Measure, K: StrikePair,
             max_cells=DEFAULT_CELL_CAP) -> RelaxedPrimalLP:
    if mu.points.size * nu.points.size > max_cells:
        raise SizeCap(
            f"LP instance {mu.points.size}x{nu.points.size} exceeds the cell cap")
    return RelaxedPrimalLP(np.asarray(mu.points, dtype=float),
                           np.asarray(mu.weights, dtype=float),
                           np.asarray(nu.points, dtype=float),
                           np.asarray(nu.weights, dtype=float), K)


# ---------------------------------------------------------------------------
# internal dense two-phase simplex


def _pivot(T, basis, pr, pc):
    T[pr] /= T[pr, pc]
    col = T[:, pc].copy()
    col[pr] = 0.0
    T -= np.outer(col, T[pr])
    basis[pr] = pc


def _run_simplex(T, basis, ncols, allowed, max_degenerate, tol=1e-11):
    """Minimize the last row of tableau T over the allowed columns."""
    degenerate = 0
    bland = False
    for _ in range(200000):
        red = T[-1, :ncols]
        if bland:
            cand = np.nonzero(allowed & (red < -tol))[0]
            if cand.size == 0:
                return True
            pc = int(cand[0])
        else:
            masked = np.where(allowed, red, np.inf)
            pc = int(np.argmin(masked))
            if masked[pc] >= -tol:
                return True
        col = T[:-1, pc]
        pos = col > tol
        if not np.any(pos):
            return False  # unbounded direction
        ratios = np.where(pos, T[:-1, -1] / np.where(pos, col, 1.0), np.inf)
        pr = int(np.argmin(ratios))
        if bland:
            best = ratios[pr]
            ties = np.nonzero(np.abs(ratios - best) <= tol * (1.0 + abs(best)))[0]
            pr = int(min(ties, key=lambda i: basis[i]))
        if ratios[pr] <= tol:
            degenerate += 1
            if degenerate > max_degenerate:
                bland = True
        _pivot(T, basis, pr, pc)
    raise NumericalBreakdown("simplex iteration cap reached")


def dense_simplex(A, b, c, tol=1e-9):
    """Maximize c @ z subject to A z = b, z >= 0 (dense two-phase tableau)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    max_deg = 5 * m
    if not _run_simplex(T, basis, n + m, allowed, max_deg):
        raise NumericalBreakdown("phase-1 simplex unbounded")
    if T[-1, -1] < -1e-9 * (1.0 + abs(b).sum()):
        raise Infeasible(f"phase-1 residual {-T[-1, -1]:.3e}")
    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            row = T[i, :n]
            k = int(np.argmax(np.abs(row)))
            if abs(row[k]) > 1e-10:
                _pivot(T, basis, i, k)
    allowed[n:] = False
    # phase-2 objective: minimize -c
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for i, bi in enumerate(basis):
        if bi < n and T[-1, bi] != 0.0:
            T[-1] -= T[-1, bi] * T[i]
    if not _run_simplex(T, basis, n + m, allowed, max_deg):
        raise Unbounded("objective unbounded above")
    z = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            z[bi] = T[i, -1]
    return float(c @ z), z


# ---------------------------------------------------------------------------
# solving


def _solve_sparse(lp: RelaxedPrimalLP):
    A, rhs = lp.constraints()
    c = lp.objective()
    res = linprog(-c, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs-ipm",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        raise Infeasible("LP infeasible: marginals not in convex order?")
    if res.status == 3:
        raise Unbounded("LP unbounded")
    if not res.success:
        raise NumericalBreakdown(f"LP solver failed: {res.message}")
    return float(-res.fun), np.asarray(res.x)


def solve_lp(lp: RelaxedPrimalLP, force_dense=None) -> LPSolution:
    use_dense = lp.n_vars <= _DENSE_LIMIT if force_dense is None else force_dense
    if use_dense:
        A, rhs = lp.constraints()
        value, z = dense_simplex(A.toarray(), rhs, lp.objective())
        route = "dense-simplex"
    else:
        value, z = _solve_sparse(lp)
        route = "highs-sparse"
    nm = lp.n * lp.m
    q = z[:nm].reshape(lp.n, lp.m)
    r = z[nm:].reshape(lp.n, lp.m)
    sol = LPSolution("optimal", value, q, r, {"route": route})
    _check_solution(lp, sol)
    return sol


def _check_solution(lp, sol, tol=1e-9):
    scale = max(1.0, float(lp.mu_w.sum()))
    row = np.abs((sol.q + sol.r).sum(axis=1) - lp.mu_w).max()
    col = np.abs((sol.q + sol.r).sum(axis=0) - lp.nu_w).max()
    dev_q = np.abs(sol.q @ lp.y - sol.q.sum(axis=1) * lp.x).max()
    dev_r = np.abs(sol.r @ lp.y - sol.r.sum(axis=1) * lp.x).max()
    worst = max(row, col, dev_q, dev_r)
    sol.diagnostics["constraint_residual"] = worst
    if worst > tol * scale * max(1.0, np.abs(lp.y).max()):
        raise NumericalBreakdown(f"LP solution violates constraints by {worst:.3e}")
    obj = float(lp.objective() @ np.concatenate([sol.q.ravel(), sol.r.ravel()]))
    if abs(obj - sol.value) > tol * max(1.0, abs(sol.value)):
        raise NumericalBreakdown("LP value inconsistent with reported solution")


def oracle_price(mu: Measure, nu: Measure, K: StrikePair,
                 max_cells=DEFAULT_CELL_CAP):
    lp = build_lp(mu, nu, K, max_cells=max_cells)
    return solve_lp(lp).value
