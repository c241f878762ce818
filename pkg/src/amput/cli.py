"""Command-line front door for pricing, hedging and verification runs."""

import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .errors import AmputError, ConvexOrderViolated, InvalidInput
from .hedging import build_superhedge, hedge_cost, verify_pathwise
from .leftcurtain import build_left_curtain, to_transport_plan
from .measures import (PutCurve, measure_from_json, measures_from_put_curves)
from .oracle import oracle_price
from .pricing import (RegionLabel, StrikePair, classify_region,
                      evaluate_under_plan, price)

EXIT_INVALID = 2
EXIT_CONVEX_ORDER = 3
EXIT_NUMERICAL = 4


def _max_threads():
    raw = os.environ.get("ROBUST_AMPUT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(8, os.cpu_count() or 1)


def _read_put_curve(path, discount):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        strikes = [float(r["strike"]) for r in rows]
        prices = [float(r["price"]) for r in rows]
    except (OSError, KeyError, ValueError) as exc:
        raise InvalidInput(f"cannot read put curve {path}: {exc}")
    return PutCurve(label=os.path.basename(path), strikes=strikes,
                    prices=prices, discount=discount)


def _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid):
    have_measures = mu is not None and nu is not None
    have_curves = curve1 is not None and curve2 is not None
    if have_measures == have_curves:
        raise InvalidInput(
            "provide exactly one input source: --mu/--nu or --curve1/--curve2")
    if have_measures:
        return measure_from_json(mu, default_grid=grid), \
            measure_from_json(nu, default_grid=grid)
    c1 = _read_put_curve(curve1, disc1)
    c2 = _read_put_curve(curve2, disc2)
    return measures_from_put_curves(c1, c2)


def _run(fn):
    try:
        return fn()
    except ConvexOrderViolated as exc:
        click.echo(f"error: convex order violated ({exc})", err=True)
        sys.exit(EXIT_CONVEX_ORDER)
    except InvalidInput as exc:
        click.echo(f"error: invalid input ({exc})", err=True)
        sys.exit(EXIT_INVALID)
    except AmputError as exc:
        click.echo(f"error: numerical failure ({exc})", err=True)
        sys.exit(EXIT_NUMERICAL)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


def _source_options(fn):
    for deco in (
        click.option("--mu", type=click.Path(exists=True), default=None,
                     help="time-1 measure JSON"),
        click.option("--nu", type=click.Path(exists=True), default=None,
                     help="time-2 measure JSON"),
        click.option("--curve1", type=click.Path(exists=True), default=None,
                     help="time-1 put-curve CSV (strike,price)"),
        click.option("--curve2", type=click.Path(exists=True), default=None,
                     help="time-2 put-curve CSV (strike,price)"),
        click.option("--disc1", type=float, default=1.0,
                     help="time-1 discount factor"),
        click.option("--disc2", type=float, default=1.0,
                     help="time-2 discount factor"),
        click.option("--grid", type=int, default=1000,
                     help="grid size for parametric measure specs"),
        click.option("--tol", type=float, default=1e-9, help="gate tolerance"),
        click.option("--out", type=click.Path(), default=None,
                     help="output file path"),
    ):
        fn = deco(fn)
    return fn


@click.group()
def main():
    """Robust upper bounds and superhedges for two-date American puts."""


@main.command("price")
@_source_options
@click.option("--k1", type=float, required=True)
@click.option("--k2", type=float, required=True)
def cmd_price(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out, k1, k2):
    """Classify the strike pair and compute the upper-bound price."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        map_ = build_left_curtain(m_mu, m_nu)
        sol = price(map_, m_mu, m_nu, StrikePair(k1, k2))
        return sol

    sol = _run(task)
    click.echo(f"region    {sol.region.value}")
    if sol.x_star is not None:
        click.echo(f"triple    f*={sol.f_star:.10g} x*={sol.x_star:.10g} "
                   f"g*={sol.g_star:.10g}")
    click.echo(f"price     {sol.price:.10g}")
    click.echo(f"threshold {sol.threshold:.10g}")
    _emit(json.dumps(sol.to_dict(), indent=2, default=float), out)


@main.command("hedge")
@_source_options
@click.option("--k1", type=float, required=True)
@click.option("--k2", type=float, required=True)
@click.option("--table-out", type=click.Path(), default=None,
              help="payoff table CSV path")
def cmd_hedge(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out, k1, k2,
              table_out):
    """Build the cheapest superhedge and emit its components and tables."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        map_ = build_left_curtain(m_mu, m_nu)
        K = StrikePair(k1, k2)
        sol = price(map_, m_mu, m_nu, K)
        h = build_superhedge(sol, map_, m_mu, m_nu, K)
        return sol, h

    sol, h = _run(task)
    gap = h.cost - sol.price
    click.echo(f"region {sol.region.value}  cost {h.cost:.10g}  "
               f"duality gap {gap:.3e}")
    payload = h.to_dict()
    payload["duality_gap"] = gap
    _emit(json.dumps(payload, indent=2, default=float), out)
    if table_out:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x", "phi", "theta1"])
        for x, p, t in zip(h.x_grid, h.phi_table, h.theta1_table):
            w.writerow([f"{x:.17g}", f"{p:.17g}", f"{t:.17g}"])
        _emit(buf.getvalue(), table_out)


@main.command("coupling")
@_source_options
def cmd_coupling(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out):
    """Tabulate the fitted transport functions f and g with jump data."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        return build_left_curtain(m_mu, m_nu)

    map_ = _run(task)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["x", "f", "g", "lam_f", "lam_g", "diag"])
    for i in range(map_.xs.size):
        w.writerow([f"{map_.xs[i]:.17g}", f"{map_.fs[i]:.17g}",
                    f"{map_.gs[i]:.17g}", f"{map_.lam_f[i]:.17g}",
                    f"{map_.lam_g[i]:.17g}", int(map_.diag[i])])
    click.echo(f"f jumps: {map_.f_jumps}")
    click.echo(f"g jumps: {map_.g_jumps}")
    click.echo(f"regeneration pairs: {[(f, x) for (f, x, *_) in map_.regen_pairs]}")
    _emit(buf.getvalue(), out)


def _parse_range(spec):
    try:
        lo, hi, n = spec.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise InvalidInput(f"range spec {spec!r} is not lo:hi:n")


@main.command("region-map")
@_source_options
@click.option("--k1", "k1_spec", required=True, help="K1 range lo:hi:n")
@click.option("--k2", "k2_spec", required=True, help="K2 range lo:hi:n")
def cmd_region_map(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out,
                   k1_spec, k2_spec):
    """Sweep a strike grid, emitting `k1,k2,region,price` per cell."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        map_ = build_left_curtain(m_mu, m_nu)
        lo1, hi1, n1 = _parse_range(k1_spec)
        lo2, hi2, n2 = _parse_range(k2_spec)
        k1s = np.linspace(lo1, hi1, n1)
        k2s = np.linspace(lo2, hi2, n2)
        cells = [(a, b) for a in k1s for b in k2s if b < a]

        def one(cell):
            a, b = cell
            sol = price(map_, m_mu, m_nu, StrikePair(a, b))
            return (a, b, sol.region.value, sol.price)

        with ThreadPoolExecutor(max_workers=_max_threads()) as pool:
            rows = list(pool.map(one, cells))
        return sorted(rows)

    rows = _run(task)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["k1", "k2", "region", "price"])
    for (a, b, reg, p) in rows:
        w.writerow([f"{a:.17g}", f"{b:.17g}", reg, f"{p:.17g}"])
    _emit(buf.getvalue(), out)


@main.command("verify")
@_source_options
@click.option("--k1", type=float, required=True)
@click.option("--k2", type=float, required=True)
@click.option("--samples", type=int, default=100000)
@click.option("--seed", type=int, default=0)
@click.option("--lp-cells", type=int, default=200 * 200,
              help="size cap for the LP oracle")
def cmd_verify(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out, k1, k2,
               samples, seed, lp_cells):
    """Run price, hedge, plan and LP oracle; report the duality sandwich."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        map_ = build_left_curtain(m_mu, m_nu)
        K = StrikePair(k1, k2)
        sol = price(map_, m_mu, m_nu, K)
        plan = to_transport_plan(map_, m_mu, m_nu)
        plan.validate()
        h = build_superhedge(sol, map_, m_mu, m_nu, K)
        lower = evaluate_under_plan(plan, sol.threshold, K)
        hc_discrete = hedge_cost(h, m_mu, m_nu, discrete=True)
        report = {
            "region": sol.region.value,
            "mbep": sol.price,
            "hedge_cost": h.cost,
            "hedge_cost_discrete": hc_discrete,
            "plan_value": lower,
            "duality_gap": h.cost - sol.price,
        }
        n_cells = m_mu.points.size * m_nu.points.size
        if n_cells <= lp_cells:
            lp = oracle_price(m_mu, m_nu, K, max_cells=lp_cells)
            report["lp_value"] = lp
            report["sandwich_ok"] = bool(
                lower <= lp + tol and lp <= hc_discrete + tol)
        else:
            report["lp_value"] = None
            report["sandwich_ok"] = None
        rng = np.random.default_rng(seed)
        xs, ys = plan.sample(rng, samples)
        rep = verify_pathwise(h, (xs, ys), K, tol=tol)
        report["pathwise_violations"] = rep["violations"]
        report["worst_margin"] = rep["worst_margin"]
        report["gates_ok"] = bool(
            abs(report["duality_gap"]) <= max(1e-6, 10 * tol)
            and rep["violations"] == 0
            and report["sandwich_ok"] is not False)
        return report

    report = _run(task)
    _emit(json.dumps(report, indent=2, default=float), out)
    if not report["gates_ok"]:
        sys.exit(1)


@main.command("simulate")
@_source_options
@click.option("--k1", type=float, required=True)
@click.option("--k2", type=float, required=True)
@click.option("--samples", type=int, default=100000)
@click.option("--seed", type=int, default=0)
def cmd_simulate(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out, k1, k2,
                 samples, seed):
    """Draw paths from the fitted coupling and tabulate payoff vs hedge."""

    def task():
        m_mu, m_nu = _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)
        map_ = build_left_curtain(m_mu, m_nu)
        K = StrikePair(k1, k2)
        sol = price(map_, m_mu, m_nu, K)
        plan = to_transport_plan(map_, m_mu, m_nu)
        h = build_superhedge(sol, map_, m_mu, m_nu, K)
        rng = np.random.default_rng(seed)
        xs, ys = plan.sample(rng, samples)
        return sol, h, K, xs, ys

    sol, h, K, xs, ys = _run(task)
    exercised = xs < sol.threshold
    payoff = np.where(exercised, np.maximum(K.k1 - xs, 0.0),
                      np.maximum(K.k2 - ys, 0.0))
    hedge_val = h.phi(xs) + h.psi.value(ys) + np.where(
        exercised, h.theta1(xs) * (ys - xs), 0.0)
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / np.sqrt(len(payoff)))
    click.echo(f"mean payoff {mean:.8g} (price {sol.price:.8g}, "
               f"{abs(mean - sol.price) / max(se, 1e-300):.2f} SE)")
    click.echo(f"superhedge violations: {int(np.sum(hedge_val < payoff - tol))}")
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["x", "y", "exercised", "payoff", "hedge_value"])
    for row in zip(xs, ys, exercised.astype(int), payoff, hedge_val):
        w.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", row[2],
                    f"{row[3]:.17g}", f"{row[4]:.17g}"])
    _emit(buf.getvalue(), out)


@main.command("ingest")
@_source_options
def cmd_ingest(mu, nu, curve1, curve2, disc1, disc2, grid, tol, out):
    """Normalize inputs to measure JSON (recovering laws from put curves)."""

    def task():
        return _load_pair(mu, nu, curve1, curve2, disc1, disc2, grid)

    m_mu, m_nu = _run(task)
    payload = {"mu": m_mu.to_dict(), "nu": m_nu.to_dict()}
    _emit(json.dumps(payload, indent=2, default=float), out)


if __name__ == "__main__":
    main()
