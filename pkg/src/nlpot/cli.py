"""Command-line entry point.

Exit codes: 0 success (and, for ``run``, every experiment passed), 1 some
experiment failed its pass criterion, 2 invalid input or config, 3 numerical
failure.  ``NLPOT_THREADS`` sets the worker count for bulk potential
evaluation; results do not depend on it.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .coefficients import parse_coefficient
from .elliptic import ConvergenceError, SolverConfig, StructuredVectorField, solve_dirichlet
from .experiments import PRESETS, PROBLEMS, ExperimentConfig, Solved, measure_estimate, preset, run_experiment
from .field import Ball, Grid, VectorField, gradient
from .fractional import caccioppoli_nonlocal
from .parabolic import ParabolicVectorField, solve_parabolic
from .potential import QuadratureSpec, caloric_profile, havin_mazja, riesz_profile, wolff_profile
from .verify import (
    mapping_experiment,
    sunflower_points,
    verify_riesz_domination,
)

log = logging.getLogger("nlpot")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    else:
        Path(path).write_text(text + ("" if text.endswith("\n") else "\n"))


def _svg_plot(path: str, series: dict[str, list[float]], ylabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, ys in series.items():
        ys = [y if np.isfinite(y) else np.nan for y in ys]
        ax.plot(range(len(ys)), ys, "o-", label=label, ms=3)
    ax.set_xlabel("point")
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# -- potential --------------------------------------------------------------

def cmd_potential(args) -> int:
    mu = io.read_measure(args.measure)
    quad = QuadratureSpec(m=args.nodes)
    x0 = _floats(args.point)
    if args.kind == "havin-mazja":
        n = mu.n
        h = float(np.max(mu.hi - mu.lo)) / args.inner_cells
        counts = np.maximum(2, np.rint((mu.hi - mu.lo) / h).astype(int))
        inner = Grid(tuple(mu.lo + h / 2), (h,) * n, tuple(counts))
        value = float(havin_mazja(mu, args.p, np.array(x0), inner))
        if args.out:
            io.write_csv(args.out, ["value"], [[value]])
        else:
            print(f"{value:.17g}")
        return EXIT_OK
    else:
        radii = _floats(args.radius)
        if not radii:
            raise ConfigError("--radius needs at least one value")
        if args.kind == "riesz":
            prof = riesz_profile(mu, args.beta, x0, radii, quad)
        elif args.kind == "wolff":
            prof = wolff_profile(mu, args.beta, args.p, x0, radii, quad)
        else:
            if mu.n + 1 != len(x0):
                raise ConfigError("caloric --point needs spatial coordinates followed by t0")
            prof = caloric_profile(mu, args.beta, x0[:-1], x0[-1], radii, quad)
        rows = prof.as_rows()
    if args.out:
        io.write_csv(args.out, ["R", "value"], rows)
    else:
        for R, v in rows:
            print(f"{R:.17g},{v:.17g}")
    return EXIT_OK


# -- solvers -----------------------------------------------------------------

def _grid_for(mu, cells: int) -> Grid:
    lo, hi = mu.lo[: mu.n], mu.hi[: mu.n]
    return Grid.box(lo, hi, cells)


def cmd_solve(args) -> int:
    mu = io.read_measure(args.measure)
    if mu.time:
        raise ConfigError("solve needs a spatial measure; use solve-parabolic")
    grid = _grid_for(mu, args.grid)
    a = StructuredVectorField(p=args.p, s=args.s, kappa=parse_coefficient(args.coeff))
    cfg = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    domain = None
    if args.ball:
        vals = _floats(args.ball)
        domain = Ball(tuple(vals[:-1]), vals[-1])
    u = solve_dirichlet(a, mu, grid, cfg, domain=domain)
    io.write_field(args.out, u)
    if args.grad_out:
        io.write_field(args.grad_out, gradient(u))
    log.info("converged after %d iterations, residual %.3g", u.meta["iterations"], u.meta["residual"])
    return EXIT_OK


def cmd_solve_parabolic(args) -> int:
    mu = io.read_measure(args.measure)
    if not mu.time:
        raise ConfigError("solve-parabolic needs a spacetime measure")
    t_lo = float(mu.lo[-1])
    t_hi = float(mu.hi[-1]) if args.tmax is None else args.tmax
    grid = Grid.spacetime(mu.lo[:-1], mu.hi[:-1], args.grid, t_lo, t_hi, args.dt)
    a = ParabolicVectorField(kappa=parse_coefficient(args.coeff))
    u = solve_parabolic(a, mu, grid)
    io.write_field(args.out, u)
    return EXIT_OK


# -- caccioppoli ---------------------------------------------------------------

def cmd_caccioppoli(args) -> int:
    w = io.read_field(args.field)
    if isinstance(w, VectorField):
        w = w.component(args.component)
    mu = io.read_measure(args.measure)
    ball = _floats(args.ball)
    center, R = ball[:-1], ball[-1]
    if len(center) != w.grid.n:
        raise ConfigError("--ball must be 'x1,...,xn,R'")
    reports = [
        caccioppoli_nonlocal(w, mu, center, R, sigma, k).to_dict()
        for sigma in _floats(args.sigma)
        for k in _floats(args.levels)
    ]
    _write(args.out, io.to_json({"schema": 1, "reports": reports}))
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def _points(spec: str | None, n: int) -> np.ndarray | None:
    if spec is None:
        return None
    if spec.startswith("sweep"):
        # sweep[:count[:radius]]
        parts = spec.split(":")
        count = int(parts[1]) if len(parts) > 1 else 20
        radius = float(parts[2]) if len(parts) > 2 else 0.55
        return sunflower_points(count, radius, (0.0,) * n, n)
    return io.read_points(spec)


def _solved_from_files(args) -> Solved:
    if args.field is None or args.measure is None:
        raise ConfigError("give --problem, or both --field and --measure")
    w = io.read_field(args.field)
    mu = io.read_measure(args.measure)
    if isinstance(w, VectorField):
        raise ConfigError("--field must hold the scalar solution u")
    domain = None
    if args.ball:
        vals = _floats(args.ball)
        domain = Ball(tuple(vals[:-1]), vals[-1])
    params = {"problem": "file", "p": args.p, "s": args.s}
    return Solved(w, gradient(w), mu, domain, params)


def cmd_verify(args) -> int:
    est = args.estimate
    if est == "mapping":
        grid = Grid.box([-1.0] * args.n, [1.0] * args.n, args.grid or 256)
        res = mapping_experiment(args.gamma, args.q, args.p, args.n, grid)
        _write(args.out, io.to_json(res))
        return EXIT_OK
    if est == "riesz-dom":
        mu = io.read_measure(args.measure)
        n = mu.n
        h = float(np.max(mu.hi - mu.lo)) / (args.grid or 48)
        counts = np.maximum(2, np.rint((mu.hi - mu.lo) / h).astype(int))
        inner = Grid(tuple(mu.lo + h / 2), (h,) * n, tuple(counts))
        pts = _points(args.points or "sweep:20:0.5", n)
        rep = verify_riesz_domination(mu, args.p, pts, inner)
    else:
        if args.problem:
            params = {"disk": {"p": args.p, "s": args.s}, "dirac": {"p": args.p}, "heat": {"s": args.s}}
            sol = PROBLEMS[args.problem](args.grid or 64, **params.get(args.problem, {}))
        else:
            sol = _solved_from_files(args)
        n = sol.grid.n
        pts = _points(args.points, n)
        if pts is None and sol.params.get("problem") == "file":
            pts = sunflower_points(20, 0.5, (0.0,) * n, n) if n in (2, 3) else None
            if pts is None:
                raise ConfigError("--points is required for this field")
        rep = measure_estimate(sol, est, pts, args.R, QuadratureSpec(m=args.nodes))
    d = rep.to_dict()
    if args.out and args.out.endswith(".csv"):
        terms = sorted(rep.rhs)
        io.write_csv(
            args.out,
            ["point", "lhs", *terms, "c"],
            ([" ".join(f"{v:g}" for v in pt), lhs, *[rep.rhs[t][i] for t in terms], c] for i, (pt, lhs, c) in enumerate(zip(rep.points, rep.lhs, rep.c))),
        )
    else:
        _write(args.out, io.to_json(d))
    if args.svg:
        _svg_plot(args.svg, {est: rep.c}, "empirical c")
    return EXIT_OK


# -- presets and runs -----------------------------------------------------------------

def cmd_preset(args) -> int:
    if args.list:
        for name in sorted(PRESETS):
            print(name)
        return EXIT_OK
    if not args.name:
        raise ConfigError("give a preset name or --list")
    try:
        cfg = preset(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    _write(args.out, io.to_json({"experiments": [cfg.to_dict()]}))
    return EXIT_OK


def load_config(path: str) -> list[ExperimentConfig]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(data, dict) and "experiments" in data:
        items = data["experiments"]
    elif isinstance(data, dict):
        items = [data]
    else:
        items = data
    if not isinstance(items, list):
        raise ConfigError("config must hold a list of experiments")
    out = []
    for item in items:
        if isinstance(item, str):
            out.append(preset(item))
        elif isinstance(item, dict):
            out.append(ExperimentConfig.from_dict(item))
        else:
            raise ConfigError("each experiment is a preset name or an object")
    return out


def cmd_run(args) -> int:
    try:
        configs = load_config(args.config)
    except KeyError as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    results = []
    for cfg in configs:
        log.info("running %s", cfg.name)
        res = run_experiment(cfg)
        results.append(res)
        print(f"{'PASS' if res['passed'] else 'FAIL'} {cfg.name}")
    timing = {r["name"]: r.pop("timing") for r in results}
    report = {"schema": 1, "passed": all(r["passed"] for r in results), "experiments": results}
    _write(args.out, io.to_json(report)) if args.out else None
    if args.timing:
        Path(args.timing).write_text(io.to_json(timing) + "\n")
    if args.csv:
        io.write_csv(args.csv, ["experiment", "passed"], ([r["name"], int(r["passed"])] for r in results))
    if args.svg and results:
        series = {}
        for r in results:
            ref = r["result"].get("refinement")
            if ref:
                series[r["name"]] = ref["c_max"]
        if series:
            _svg_plot(args.svg, series, "max empirical c per grid")
    return EXIT_OK if report["passed"] else EXIT_FAILED


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlpot", description="Nonlinear potentials, measure-data solvers and estimate checks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", help="evaluate a potential at one point")
    p.add_argument("--kind", choices=["riesz", "wolff", "havin-mazja", "caloric"], required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--point", required=True, help="comma-separated coordinates (caloric: x..., t0)")
    p.add_argument("--radius", default="1", help="comma-separated truncation radii")
    p.add_argument("--measure", required=True)
    p.add_argument("--nodes", type=int, default=256, help="quadrature nodes")
    p.add_argument("--inner-cells", type=int, default=32, help="Havin-Maz'ja inner grid cells per axis")
    p.add_argument("--out")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("solve", help="solve the elliptic Dirichlet problem")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--coeff", default="const:1")
    p.add_argument("--measure", required=True)
    p.add_argument("--grid", type=int, default=64, help="cells along the longest axis")
    p.add_argument("--ball", help="restrict to the ball 'x1,...,xn,R'")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--out", required=True)
    p.add_argument("--grad-out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("solve-parabolic", help="backward-Euler solve of the p = 2 parabolic problem")
    p.add_argument("--coeff", default="const:1")
    p.add_argument("--measure", required=True)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--tmax", type=float)
    p.add_argument("--dt", type=float, help="time step (default h^2)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve_parabolic)

    p = sub.add_parser("caccioppoli", help="non-local Caccioppoli inequality on a ball")
    p.add_argument("--sigma", default="0.25", help="comma-separated sigma values in (0, 1/2)")
    p.add_argument("--levels", default="0", help="comma-separated truncation levels k")
    p.add_argument("--ball", required=True, help="'x1,...,xn,R'")
    p.add_argument("--field", required=True)
    p.add_argument("--component", type=int, default=0, help="component of a vector field")
    p.add_argument("--measure", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_caccioppoli)

    p = sub.add_parser("verify", help="measure one pointwise estimate")
    p.add_argument(
        "--estimate",
        required=True,
        choices=["km-zero", "grad-p", "grad-2", "parabolic-grad", "parabolic-zero", "riesz-dom", "lipschitz", "mapping"],
    )
    p.add_argument("--problem", choices=sorted(PROBLEMS), help="solve a built-in problem instead of reading files")
    p.add_argument("--field", help="solution u (field file)")
    p.add_argument("--measure")
    p.add_argument("--ball", help="domain ball 'x1,...,xn,R' for file inputs")
    p.add_argument("--points", help="points file, or sweep[:count[:radius]]")
    p.add_argument("--grid", type=int, help="cells per axis (default 64, 256 for mapping)")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--R", type=float, default=0.2)
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--q", type=float)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("preset", help="print a preset experiment config")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("run", help="run the experiments of a config file")
    p.add_argument("config")
    p.add_argument("--out", help="JSON report")
    p.add_argument("--csv", help="CSV summary")
    p.add_argument("--timing", help="write run times here (kept out of the report)")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
