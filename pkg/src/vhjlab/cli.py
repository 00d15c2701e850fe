"""``vhj-lab``: command-line front end.

Each subcommand reads an optional TOML config, applies ``--set section.key=value``
overrides and the shortcut flags, runs, and writes CSV data, two-column ``.dat``
files and a JSON summary into the output directory. Exit codes: 0 success,
2 invalid configuration, 3 solver failure, 4 failed property or acceptance check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import importlib.metadata
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import acceptance, barriers
from .analysis import (InsufficientSamples, beta_exponent, comparison_harness, holder_seminorm,
                       slope_fit)
from .config import ConfigError, RunConfig, load, parse_override
from .domain import build_grid
from .ergodic import ergodic_solve
from .expr import Expression
from .parabolic import (ParabolicProblem, SolverError, StepControl, detect_boundary_loss,
                        solve_parabolic)
from .stationary import StationaryProblem, solve_state_constraint, solve_stationary
from .supconv import (EmptyWindow, TimeSeriesField, check_maximizer_window,
                      check_time_lipschitz, initial_layer_excess, sup_convolve)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
THREADS_ENV = "VHJ_THREADS"

# shortcut flags: (flag, dotted key, type)
SHORTCUTS = {
    "common": [("--domain", "problem.domain", str), ("--n", "problem.n", int),
               ("--p", "problem.p", float), ("--q", "problem.q", float),
               ("--out", "output.dir", str)],
    "verify-barrier": [("--C", "verify-barrier.C", float),
                       ("--delta", "verify-barrier.delta", float)],
    "supconv": [("--alpha", "supconv.alpha", float), ("--input", "supconv.input", str)],
    "holder": [("--input", "holder.input", str), ("--beta", "holder.beta", float)],
    "slope": [("--input", "slope.input", str)],
}


# ------------------------------------------------------------------ io

def _versions() -> dict:
    import numba
    import scipy

    try:
        own = importlib.metadata.version("artifact")
    except importlib.metadata.PackageNotFoundError:
        own = "unknown"
    return {"artifact": own, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def write_summary(path: Path, cfg: RunConfig, results: dict, status: str) -> None:
    doc = {"config": cfg.as_dict(), "results": results, "status": status,
           "versions": _versions(),
           "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def write_dat(path: Path, a, b, header: str) -> None:
    np.savetxt(path, np.column_stack([a, b]), header=header, fmt="%.17g")


def write_field_csv(path: Path, points, values) -> None:
    cols = ["x", "y"][: points.shape[1]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["u"])
        for pt, v in zip(points, values):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])


def read_field_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path} holds no rows")
    cols = [c for c in ("x", "y") if c in rows[0]]
    try:
        pts = np.array([[float(r[c]) for c in cols] for r in rows])
        vals = np.array([float(r["u"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: expected columns x[,y],u ({exc})") from None
    return pts, vals


def write_trajectory_csv(path: Path, times, points, snapshots) -> None:
    """Long format: one row per (time, node)."""
    cols = ["x", "y"][: points.shape[1]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "node"] + cols + ["u"])
        for t, snap in zip(times, snapshots):
            for i, (pt, v) in enumerate(zip(points, snap)):
                w.writerow([repr(float(t)), i] + [repr(float(c)) for c in pt] + [repr(float(v))])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path} holds no rows")
    try:
        t = np.array([float(r["t"]) for r in rows])
        node = np.array([int(r["node"]) for r in rows])
        u = np.array([float(r["u"]) for r in rows])
        cols = [c for c in ("x", "y") if c in rows[0]]
        xy = np.array([[float(r[c]) for c in cols] for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: expected columns t,node,x[,y],u ({exc})") from None
    times = np.unique(t)
    nodes = np.unique(node)
    if t.size != times.size * nodes.size:
        raise ConfigError(f"{path}: every time level must list every node")
    order = np.lexsort((node, t))
    values = u[order].reshape(times.size, nodes.size)
    points = xy[order][: nodes.size]
    return times, points, values


# ------------------------------------------------------------------ commands

def _grid(cfg):
    return build_grid(cfg.problem.domain, cfg.problem.n)


def _control(cfg, **extra):
    c = cfg.control
    return StepControl(sigma=c.sigma, g_cap=c.g_cap, snapshot_dt=c.snapshot_dt,
                       max_steps=c.max_steps, **extra)


def cmd_solve_parabolic(cfg, out: Path):
    pr = cfg.problem
    grid = _grid(cfg)
    u0 = Expression(pr.u0)(grid.points, 0.0)
    g = Expression(pr.g)
    b = grid.boundary
    g0 = g(grid.points[b], 0.0)
    # snap round-off mismatches (cut cells) so that u0 <= g holds exactly at t = 0
    close = np.abs(u0[b] - g0) <= 1e-12
    u0[b[close]] = g0[close]
    problem = ParabolicProblem(grid, pr.p, pr.q, f=Expression(pr.f), g=g, u0=u0, T=pr.T)
    traj = solve_parabolic(problem, _control(cfg))
    write_trajectory_csv(out / "trajectory.csv", traj.times, grid.points, traj.snapshots)
    write_field_csv(out / "final.csv", grid.points, traj.final)
    gaps = traj.boundary_gaps().max(axis=1) if b.size else np.zeros(traj.times.size)
    write_dat(out / "boundary_gap.dat", traj.times, gaps, "t max(g-u) on boundary")
    write_dat(out / "sup_norm.dat", traj.times, np.abs(traj.snapshots).max(axis=1), "t max|u|")
    if grid.dim == 1:
        write_dat(out / "final_profile.dat", grid.x, traj.final, "x u(x,T)")
    events = detect_boundary_loss(traj)
    return {"steps": traj.meta["steps"], "g_cap": traj.meta["g_cap"],
            "min_dt": float(traj.step_dt.min()) if traj.step_dt.size else None,
            "max_boundary_excess": float(traj.step_boundary_excess.max(initial=-np.inf)),
            "final_sup_norm": float(np.abs(traj.final).max()),
            "detached_snapshots": len({e[0] for e in events}),
            "final_boundary_gap": float(gaps[-1])}, True


def cmd_solve_stationary(cfg, out: Path):
    pr, opts = cfg.problem, cfg.options
    grid = _grid(cfg)
    if opts.state_constraint:
        fv = Expression(pr.f)(grid.points, 0.0)
        M2 = opts.M2 or barriers.constants_for_grid(grid, pr.p, pr.q, fv, lam=pr.lam).M2
        res = solve_state_constraint(grid, pr.p, pr.q, pr.lam, fv, M2, _control(cfg),
                                     cfg.control.tol)
    else:
        res = solve_stationary(StationaryProblem(grid, pr.p, pr.q, pr.lam, f=Expression(pr.f),
                                                 g=Expression(pr.g)), _control(cfg),
                               cfg.control.tol)
    write_field_csv(out / "solution.csv", grid.points, res.values)
    if grid.dim == 1:
        write_dat(out / "solution.dat", grid.x, res.values, "x u(x)")
    hist = res.diagnostics.get("residual_history", [])
    write_dat(out / "residual.dat", np.arange(len(hist)), hist, "iteration residual")
    diag = {k: v for k, v in res.diagnostics.items() if k != "residual_history"}
    return {"diagnostics": diag, "sup_norm": float(np.abs(res.values).max())}, True


def cmd_ergodic(cfg, out: Path):
    pr, opts = cfg.problem, cfg.options
    grid = _grid(cfg)
    res = ergodic_solve(grid, pr.p, pr.q, Expression(pr.f), cfg.control.lambdas,
                        _control(cfg), x0=opts.x0, M2=opts.M2, tol=cfg.control.tol)
    with open(out / "c_table.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["lambda", "c", "lambda_u_x0"])
        w.writeheader()
        w.writerows(res.table())
    write_field_csv(out / "u_inf.csv", grid.points, res.u_inf)
    write_dat(out / "c_k.dat", res.lambdas, res.c_k, "lambda c_k")
    if grid.dim == 1:
        write_dat(out / "u_inf.dat", grid.x, res.u_inf, "x u_inf(x) - u_inf(x0)")
    return {"c": res.c, "c_k": res.table(), "x0": res.x0, "M2": res.M2, "band": res.band,
            "band_violations": res.band_violations, "converged": res.converged,
            "c_steps": res.c_steps, "w_steps": res.w_steps,
            "per_lambda": res.diagnostics}, True


def cmd_verify_barrier(cfg, out: Path):
    pr, opts = cfg.problem, cfg.options
    p, q = pr.p, pr.q
    C1, C2 = barriers.find_local_constants(p, q, opts.C, opts.dim, opts.sample_count)
    local = barriers.BarrierParams(p=p, q=q, C1=C1, C2=C2, C=opts.C, dim=opts.dim)
    h2, where = barriers.verify_H2(local, sample_count=opts.sample_count)
    grid = build_grid(pr.domain, pr.n, opts.delta)
    fv = Expression(pr.f)(grid.points, 0.0)
    params = barriers.constants_for_grid(grid, p, q, fv, lam=pr.lam, C=opts.C,
                                         sample_count=opts.sample_count)
    collar, core = barriers.verify_ubar(grid, p, q, pr.lam, fv, params)
    rs = np.geomspace(1e-4, 1 - 1e-4, 200)
    pts = np.column_stack([rs] + [np.zeros_like(rs)] * (opts.dim - 1))
    write_dat(out / "h2_margin_radial.dat", rs, barriers.h2_margins(pts, local),
              "r G1(Dw1,D2w1) along the first axis")
    ok = h2 > 0 and collar > 0 and core > 0
    return {"beta": beta_exponent(p, q), "C1": C1, "C2": C2, "H2_margin": h2,
            "H2_argmin": where, "M1": params.M1, "M2": params.M2, "delta": grid.delta,
            "ubar_margin_collar": collar, "ubar_margin_core": core,
            "notes": params.notes}, ok


def cmd_supconv(cfg, out: Path):
    opts = cfg.options
    times, points, values = read_trajectory_csv(opts.input)
    series = TimeSeriesField(times, values)
    reg = sup_convolve(series, opts.alpha)
    lip = check_time_lipschitz(reg, opts.alpha)
    window = check_maximizer_window(series, opts.alpha)
    try:
        layer = initial_layer_excess(series, opts.alpha)
    except EmptyWindow:
        layer = None
    write_trajectory_csv(out / "regularized.csv", times, points, reg.values)
    write_dat(out / "sup_excess.dat", times, (reg.values - values).max(axis=1),
              "t max_x(u^a - u)")
    report = {"K": series.K, "alpha": opts.alpha, "max_slope": lip.max_slope,
              "slope_bound": lip.bound, "slope_slack": lip.slack, "lipschitz_ok": lip.passed,
              "maximizer_window_ok": window, "min_excess": float((reg.values - values).min()),
              "initial_layer_excess": layer}
    ok = lip.passed and window and report["min_excess"] >= 0
    return report, ok


def cmd_holder(cfg, out: Path):
    pr, opts = cfg.problem, cfg.options
    points, values = read_field_csv(opts.input)
    beta = opts.beta if opts.beta is not None else beta_exponent(pr.p, pr.q)
    rep = holder_seminorm(values, beta, points=points)
    i, j = rep.pair
    return {"beta": beta, "seminorm": rep.seminorm, "pair": [i, j],
            "pair_points": [points[i], points[j]]}, True


def cmd_slope(cfg, out: Path):
    times, points, values = read_trajectory_csv(cfg.options.input)
    fit = slope_fit(times, values, cfg.options.window_fraction)
    write_dat(out / "mean_u.dat", times, values.mean(axis=1), "t mean_x u")
    return dataclasses.asdict(fit), True


def cmd_compare(cfg, out: Path):
    pr = cfg.problem
    grid = _grid(cfg)
    if grid.dim != 1:
        raise ConfigError("compare generates random data on 1D grids only")
    rng = np.random.default_rng(cfg.seed)
    pairs = acceptance.random_ordered_pairs(grid, pr.p, pr.q, rng, cfg.options.count, T=pr.T)
    rep = comparison_harness(pairs, _control(cfg))
    write_dat(out / "violations.dat", np.arange(len(rep.violations)), rep.violations,
              "pair max (u1-u2)+")
    return {"max_violation": rep.max_violation, "violations": rep.violations,
            "worst_pair": rep.worst_pair}, rep.max_violation <= 1e-10


def cmd_acceptance(cfg, out: Path):
    results = acceptance.run_all(only=set(cfg.options.only) or None, seed=cfg.seed)
    timing = {c.number: c.elapsed for c in results}
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    rows = {str(c.number): {"title": c.title, "passed": c.passed, "note": c.note,
                            "measured": c.measured} for c in results}
    return rows, all(c.passed for c in results)


COMMANDS = {
    "solve-parabolic": cmd_solve_parabolic,
    "solve-stationary": cmd_solve_stationary,
    "ergodic": cmd_ergodic,
    "verify-barrier": cmd_verify_barrier,
    "supconv": cmd_supconv,
    "holder": cmd_holder,
    "slope": cmd_slope,
    "compare": cmd_compare,
    "acceptance": cmd_acceptance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vhj-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config entry (repeatable)")
        sp.add_argument("--seed", type=int, default=0)
        for flag, key, typ in SHORTCUTS["common"] + SHORTCUTS.get(name, []):
            sp.add_argument(flag, type=typ, dest="short:" + key, default=None)
    return parser


def _apply_threads():
    value = os.environ.get(THREADS_ENV)
    if value:
        import numba

        try:
            numba.set_num_threads(max(1, min(int(value), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {value!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = cfg = None
    try:
        _apply_threads()
        overrides = dict(parse_override(s) for s in args.set)
        for key, value in vars(args).items():
            if key.startswith("short:") and value is not None:
                overrides[key[len("short:"):]] = value
        cfg = load(args.config, args.command, overrides, seed=args.seed)
        out = Path(cfg.output.dir)
        if cfg.output.prefix:
            out = out / cfg.output.prefix
        out.mkdir(parents=True, exist_ok=True)
        results, ok = COMMANDS[args.command](cfg, out)
    except (ConfigError, InsufficientSamples, EmptyWindow) as exc:
        print(f"vhj-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, barriers.SearchExhausted) as exc:
        print(f"vhj-lab: solver error: {exc}", file=sys.stderr)
        if out is not None:
            write_summary(out / "summary.json", cfg, {"error": str(exc)}, "solver-error")
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"vhj-lab: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_summary(out / "summary.json", cfg, results, "ok" if ok else "check-failed")
    print(f"vhj-lab {args.command}: {'ok' if ok else 'check failed'}; results in {out}")
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
