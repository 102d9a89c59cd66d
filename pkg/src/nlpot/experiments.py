"""Canonical problem instances, estimate runners and preset experiments.

A problem builder returns a ``Solved`` bundle (solution, gradient, data,
domain).  ``run_estimate`` measures one estimate on one grid, which is what
``refinement_study`` repeats over a grid list.  ``PRESETS`` holds one
ready-made experiment per estimate; ``run_experiment`` executes a config and
returns a JSON-ready result with a ``passed`` flag.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .coefficients import Constant, Jump, parse_coefficient
from .elliptic import SolverConfig, StructuredVectorField, check_structure, solve_dirichlet
from .field import Ball, Grid, ScalarField, VectorField, gradient
from .fractional import caccioppoli_nonlocal, degiorgi_bound_check
from .measure import RadonMeasure
from .parabolic import ParabolicVectorField, check_parabolic_structure, solve_parabolic
from .potential import (
    QuadratureSpec,
    caloric_potential,
    riesz_global,
    truncated_riesz,
    wolff,
)
from .verify import (
    VerificationReport,
    mapping_experiment,
    refinement_study,
    sunflower_points,
    verify_gradient_elliptic,
    verify_gradient_elliptic_p2,
    verify_lipschitz_criterion,
    verify_parabolic_gradient,
    verify_parabolic_zero_order,
    verify_riesz_domination,
    verify_zero_order_elliptic,
)


@dataclass
class Solved:
    u: ScalarField
    Du: VectorField
    mu: RadonMeasure
    domain: Ball | None
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.u.grid


def _solver_cfg(params: dict) -> SolverConfig:
    keys = ("tol", "max_iter", "strict", "eps_final", "stage_tol")
    return SolverConfig(**{k: params[k] for k in keys if k in params})


def _field(p: float, s: float, coeff) -> StructuredVectorField:
    kappa = parse_coefficient(coeff) if isinstance(coeff, str) else (coeff or Constant())
    return StructuredVectorField(p=p, s=s, kappa=kappa)


def disk_problem(cells: int = 64, p: float = 2.0, s: float = 0.0, coeff=None, **solver) -> Solved:
    """-div a(x, Du) = 1 in the unit disk, u = 0 outside; box [-1, 1]^2."""
    grid = Grid.box([-1.0, -1.0], [1.0, 1.0], cells)
    disk = Ball((0.0, 0.0), 1.0)
    dens = disk.mask(grid.points()).astype(float).reshape(grid.shape)
    mu = grid.cell_measure(dens)
    u = solve_dirichlet(_field(p, s, coeff), mu, grid, _solver_cfg(solver), domain=disk)
    return Solved(u, gradient(u), mu, disk, {"problem": "disk", "cells": cells, "p": p, "s": s})


def dirac_problem(cells: int = 32, p: float = 2.5, n: int = 3, **solver) -> Solved:
    """Unit Dirac mass at the origin, unit-ball domain in the box [-1, 1]^n."""
    lo, hi = [-1.0] * n, [1.0] * n
    grid = Grid.box(lo, hi, cells)
    ball = Ball((0.0,) * n, 1.0)
    mu = RadonMeasure.dirac([0.0] * n, lo, hi)
    u = solve_dirichlet(_field(p, 0.0, None), mu, grid, _solver_cfg(solver), domain=ball)
    return Solved(u, gradient(u), mu, ball, {"problem": "dirac", "cells": cells, "p": p, "n": n})


def newtonian(x: np.ndarray) -> np.ndarray:
    """1 / (4 pi |x|), the fundamental solution of -Laplace in R^3."""
    return 1.0 / (4 * math.pi * np.linalg.norm(x, axis=-1))


def poisson_free_problem(cells: int = 64) -> Solved:
    """-Laplace u = delta_0 on [-1, 1]^3 with the whole-space solution as boundary data."""
    lo, hi = [-1.0] * 3, [1.0] * 3
    grid = Grid.box(lo, hi, cells)
    mu = RadonMeasure.dirac([0.0] * 3, lo, hi)
    u = solve_dirichlet(_field(2.0, 0.0, None), mu, grid, boundary=newtonian)
    return Solved(u, gradient(u), mu, None, {"problem": "poisson-free", "cells": cells})


def zero_problem(cells: int = 16, n: int = 2) -> Solved:
    grid = Grid.box([-1.0] * n, [1.0] * n, cells)
    mu = RadonMeasure.zero([-1.0] * n, [1.0] * n)
    u = solve_dirichlet(_field(2.0, 0.0, None), mu, grid)
    return Solved(u, gradient(u), mu, None, {"problem": "zero", "cells": cells})


def heat_problem(cells: int = 300, *, half_width: float = 3.0, t_lo: float = -1.0, t_hi: float = 0.2, s: float = 0.0, coeff=None) -> Solved:
    """u_t - (kappa u_x)_x = delta_(0,0) on [-3, 3] x (-1, 0.2), dt = h^2."""
    grid = Grid.spacetime([-half_width], [half_width], cells, t_lo, t_hi)
    mu = RadonMeasure.dirac([0.0, 0.0], [-half_width, t_lo], [half_width, t_hi], time=True)
    kappa = parse_coefficient(coeff) if isinstance(coeff, str) else (coeff or Constant())
    a = ParabolicVectorField(s=s, kappa=kappa, offset=(1.0,) if s else ())
    u = solve_parabolic(a, mu, grid)
    return Solved(u, gradient(u), mu, None, {"problem": "heat", "cells": cells, "h": grid.h, "s": s})


def heat_kernel(x, t) -> np.ndarray:
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    return np.where(t > 0, np.exp(-x * x / (4 * np.maximum(t, 1e-300))) / np.sqrt(4 * math.pi * np.maximum(t, 1e-300)), 0.0)


PROBLEMS: dict[str, Callable[..., Solved]] = {
    "disk": disk_problem,
    "dirac": dirac_problem,
    "poisson-free": poisson_free_problem,
    "zero": zero_problem,
    "heat": heat_problem,
}


def shell_points(count: int, r_lo: float, r_hi: float, n: int = 3) -> np.ndarray:
    """Sunflower directions with radii spread evenly in [r_lo, r_hi]."""
    dirs = sunflower_points(count, 1.0, (0.0,) * n, n)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * np.linspace(r_lo, r_hi, count)[:, None]


def default_points(problem: str, count: int = 20) -> np.ndarray:
    if problem == "disk":
        return sunflower_points(count, 0.55)
    if problem == "dirac":
        return shell_points(count, 0.3, 0.55)
    if problem == "zero":
        return sunflower_points(count, 0.5)
    if problem == "heat":
        xs = np.linspace(-1.0, 1.0, 5)
        ts = [0.04, 0.1, 0.2]
        return np.array([[x, t] for t in ts for x in xs if abs(x) >= 0.3] + [[0.5, 0.04]])
    raise ValueError(f"no default points for problem {problem!r}")


ESTIMATES = ("km-zero", "grad-p", "grad-2", "parabolic-grad", "parabolic-zero", "lipschitz")


def measure_estimate(sol: Solved, estimate: str, points=None, R: float = 0.2, quad: QuadratureSpec | None = None) -> VerificationReport:
    prob = sol.params["problem"]
    pts = default_points(prob) if points is None else np.asarray(points, dtype=float)
    p = sol.params.get("p", 2.0)
    s = sol.params.get("s", 0.0)
    if estimate == "km-zero":
        rep = verify_zero_order_elliptic(sol.u, sol.mu, p, pts, R, domain=sol.domain, quad=quad)
    elif estimate == "grad-p":
        rep = verify_gradient_elliptic(sol.Du, sol.mu, p, s, pts, R, domain=sol.domain, quad=quad)
    elif estimate == "grad-2":
        rep = verify_gradient_elliptic_p2(sol.Du, sol.mu, pts, R, s=s, domain=sol.domain, quad=quad)
    elif estimate == "lipschitz":
        rep = verify_lipschitz_criterion(sol.Du, sol.mu, p, np.zeros(sol.grid.n), R, s=s, domain=sol.domain, quad=quad)
    elif estimate == "parabolic-grad":
        rep = verify_parabolic_gradient(sol.Du, sol.mu, pts, R, s=s, quad=quad)
    elif estimate == "parabolic-zero":
        rep = verify_parabolic_zero_order(sol.u, sol.mu, s, pts, R, quad=quad)
    else:
        raise ValueError(f"unknown estimate {estimate!r}; choose from {', '.join(ESTIMATES)}")
    rep.params.update({k: v for k, v in sol.params.items() if k not in rep.params})
    return rep


def run_estimate(problem: str, estimate: str, cells: int, *, R: float = 0.2, points=None, **params) -> VerificationReport:
    try:
        build = PROBLEMS[problem]
    except KeyError:
        raise ValueError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}") from None
    return measure_estimate(build(cells, **params), estimate, points, R)


# -- experiment configs ------------------------------------------------------------------

KINDS = (
    "refinement",
    "closed-form",
    "poisson-free",
    "domination",
    "mapping",
    "caccioppoli-sweep",
    "degiorgi",
    "heat",
    "negative-controls",
)


@dataclass
class ExperimentConfig:
    """One experiment; every field has a default so partial configs are valid."""

    name: str
    kind: str
    problem: str = ""
    estimate: str = ""
    grids: list[int] = field(default_factory=list)
    R: float = 0.2
    points: list[list[float]] | None = None
    params: dict[str, Any] = field(default_factory=dict)
    quad_nodes: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind == "refinement" and len(self.grids) < 2:
            raise ValueError("a refinement experiment needs at least two grids")
        if self.quad_nodes < 8:
            raise ValueError("quad_nodes must be >= 8")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


PRESETS: dict[str, dict] = {
    "closed-form": {"kind": "closed-form"},
    "poisson-n3": {"kind": "poisson-free", "grids": [96]},
    "thm2-disk": {"kind": "refinement", "problem": "disk", "estimate": "grad-2", "grids": [64, 128], "params": {"p": 2.0}},
    "thm1-disk-p3": {"kind": "refinement", "problem": "disk", "estimate": "grad-p", "grids": [64, 128], "params": {"p": 3.0}},
    "thm2-dirac-n3": {"kind": "refinement", "problem": "dirac", "estimate": "grad-2", "grids": [16, 32], "params": {"p": 2.0}},
    "km-zero-dirac": {"kind": "refinement", "problem": "dirac", "estimate": "km-zero", "grids": [16, 32, 64], "params": {"p": 2.5}},
    "lipschitz-disk": {"kind": "refinement", "problem": "disk", "estimate": "lipschitz", "grids": [64, 128], "R": 0.8, "params": {"p": 2.0}},
    "riesz-dom": {"kind": "domination", "grids": [48], "params": {"p": 2.0, "count": 50}},
    "mapping": {"kind": "mapping", "grids": [256], "params": {"gamma": 1.5, "p": 2.0, "n": 2}},
    "thm4-sweep": {
        "kind": "caccioppoli-sweep",
        "problem": "disk",
        "grids": [64, 128],
        "params": {"p": 2.0, "sigmas": [0.1, 0.25, 0.4], "quantiles": [0.0, 0.25, 0.5, 0.75, 0.9]},
    },
    "thm5-degiorgi": {"kind": "degiorgi", "problem": "disk", "grids": [64], "params": {"p": 2.0, "sigma": 0.25, "count": 20}},
    "thm3-heat": {"kind": "heat", "grids": [150, 300], "R": 0.5},
    "negative-controls": {"kind": "negative-controls"},
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return ExperimentConfig(name=name, **PRESETS[name])


# -- runners ---------------------------------------------------------------------------

def _finite(x: float) -> bool:
    return bool(np.isfinite(x))


def _run_refinement(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.params)
    quad = QuadratureSpec(m=cfg.quad_nodes)

    def problem(cells: int) -> VerificationReport:
        sol = PROBLEMS[cfg.problem](cells, **params)
        return measure_estimate(sol, cfg.estimate, cfg.points, cfg.R, quad)

    rep = refinement_study(problem, cfg.grids, cfg.estimate, keep_reports=True)
    return {"passed": rep.passed, "refinement": rep.to_dict()}


def _closed_form(cfg: ExperimentConfig) -> dict:
    """Dirac and uniform-density potentials against their antiderivatives.

    Each case also runs at twice the nodes; the change must stay under 0.5%.
    """
    rows = []
    m = cfg.quad_nodes

    def check(label, evaluate, exact, tol=0.01):
        value, doubled = evaluate(QuadratureSpec(m)), evaluate(QuadratureSpec(2 * m))
        err = abs(value - exact) / abs(exact)
        change = abs(doubled - value) / abs(value) if value else math.inf
        rows.append(
            {"case": label, "value": value, "exact": exact, "rel_error": err, "doubling_change": change, "passed": bool(err <= tol and change < 0.005)}
        )

    box3 = ([-2.0] * 3, [2.0] * 3)
    d3 = RadonMeasure.dirac([0.0] * 3, *box3)
    check("riesz n=3 beta=1", lambda q: truncated_riesz(d3, 1.0, [0.5, 0, 0], 1.0, q), 1.5)
    d2 = RadonMeasure.dirac([0.0, 0.0], [-2.0] * 2, [2.0] * 2)
    check("wolff n=2 p=3", lambda q: wolff(d2, 1 / 3, 3.0, [0.25, 0], 1.0, q), 2.0)
    # the lower cut-off (half a cell) drops about pi * h / 2 of the integral,
    # so the density is resolved at h = 0.005; the base point is a cell centre
    uni = RadonMeasure.from_density(np.ones((600, 600)), [-1.5] * 2, [1.5] * 2)
    check("wolff uniform n=2 p=2", lambda q: wolff(uni, 0.5, 2.0, [0.0025, 0.0025], 1.0, q), math.pi)
    c1 = RadonMeasure.dirac([0.0, 0.0], [-2.0, -1.0], [2.0, 1.0], time=True)
    check("caloric n=1", lambda q: caloric_potential(c1, 1.0, [0.5], 0.04, 1.0, q), 1.5)
    c2 = RadonMeasure.dirac([0.0] * 3, [-2.0, -2.0, -1.0], [2.0, 2.0, 1.0], time=True)
    check("caloric n=2", lambda q: caloric_potential(c2, 1.0, [0.3, 0.4], 0.04, 1.0, q), 7 / 3)
    return {"passed": all(r["passed"] for r in rows), "rows": rows}


def _poisson_free(cfg: ExperimentConfig) -> dict:
    cells = cfg.grids[0] if cfg.grids else 64
    sol = poisson_free_problem(cells)
    e = np.array([1.0, 0.6, 0.3])
    e /= np.linalg.norm(e)
    rows = []
    for r in np.geomspace(0.12, 1.2, 8):
        node = sol.grid.node(sol.grid.nearest_index(r * e))
        rows.append(
            {
                "r": float(np.linalg.norm(node)),
                "u_ratio": abs(sol.u.at(node)) / riesz_global(sol.mu, 2.0, node),
                "grad_ratio": float(np.linalg.norm(sol.Du.at(node))) / riesz_global(sol.mu, 1.0, node),
            }
        )
    out = {"rows": rows, "oracle": 1 / (4 * math.pi)}
    ok = True
    for key in ("u_ratio", "grad_ratio"):
        v = np.array([row[key] for row in rows])
        out[key + "_spread"] = float(v.max() / v.min() - 1)
        ok &= out[key + "_spread"] < 0.05
    out["passed"] = bool(ok)
    return out


def two_atom_measure(n: int = 3, box: float = 2.0) -> RadonMeasure:
    pos = np.zeros((2, n))
    pos[0, 0], pos[1, 0] = -0.3, 0.4
    return RadonMeasure.from_atoms(pos, [1.0, 0.5], [-box] * n, [box] * n)


def _domination(cfg: ExperimentConfig) -> dict:
    p = cfg.params.get("p", 2.0)
    n = cfg.params.get("n", 3)
    count = cfg.params.get("count", 50)
    box = cfg.params.get("box", 2.0)
    cells = cfg.grids[0] if cfg.grids else 48
    h = 2 * box / cells
    inner = Grid((-box + h / 2,) * n, (h,) * n, (cells,) * n)
    rng = np.random.default_rng(cfg.seed)
    out = {}
    for label, mu in (("dirac", RadonMeasure.dirac([0.0] * n, [-box] * n, [box] * n)), ("two-atom", two_atom_measure(n, box))):
        dirs = rng.normal(size=(count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = dirs * rng.uniform(0.2, 0.7, (count, 1))
        rep = verify_riesz_domination(mu, p, pts, inner)
        out[label] = {"c_max": rep.c_max, "c_min": min(rep.c), "report": rep.to_dict()}
    radii = np.geomspace(0.2, 0.7, 6)
    dirac = RadonMeasure.dirac([0.0] * n, [-box] * n, [box] * n)
    e = np.ones(n) / math.sqrt(n)
    sweep = verify_riesz_domination(dirac, p, radii[:, None] * e, inner)
    spread = max(sweep.c) / min(sweep.c) - 1
    out["scaling_sweep"] = {"radii": radii.tolist(), "c": sweep.c, "spread": spread}
    out["passed"] = bool(
        all(_finite(out[k]["c_max"]) and out[k]["c_max"] > 0 for k in ("dirac", "two-atom")) and spread < 0.10
    )
    return out


def _mapping(cfg: ExperimentConfig) -> dict:
    gamma = cfg.params.get("gamma", 1.5)
    p = cfg.params.get("p", 2.0)
    n = cfg.params.get("n", 2)
    cells = cfg.grids[0] if cfg.grids else 256
    grid = Grid.box([-1.0] * n, [1.0] * n, cells)
    res = mapping_experiment(gamma, cfg.params.get("q"), p, n, grid, quad=QuadratureSpec(m=cfg.quad_nodes))
    slope_ok = gamma <= 1 or abs(res["slope"] - res["expected_slope"]) <= 0.05
    exp_ok = gamma <= 1 or res["exponent_rel_error"] <= 0.10
    res["passed"] = bool(slope_ok and exp_ok)
    return res


def _sweep_one(sol: Solved, sigmas, quantiles, balls) -> list[dict]:
    w = sol.Du.component(0)
    rows = []
    for center, R in balls:
        mask = Ball(center, R).mask(sol.grid.points()).reshape(sol.grid.shape)
        vals = np.abs(w.values[mask])
        levels = [float(np.quantile(vals, q)) for q in quantiles] + [float(vals.max())]
        for sigma in sigmas:
            for qk, k in zip(list(quantiles) + ["max"], levels):
                rep = caccioppoli_nonlocal(w, sol.mu, center, R, sigma, k)
                rows.append({"center": list(center), "R": R, "sigma": sigma, "quantile": qk, **rep.to_dict()})
    return rows


def _caccioppoli_sweep(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.params)
    sigmas = params.pop("sigmas", [0.1, 0.25, 0.4])
    quantiles = params.pop("quantiles", [0.0, 0.25, 0.5, 0.75, 0.9])
    balls = [((0.0, 0.0), 0.8), ((0.2, 0.1), 0.5)]
    per_grid = {}
    for cells in cfg.grids or [64, 128]:
        sol = disk_problem(cells, **params)
        per_grid[cells] = _sweep_one(sol, sigmas, quantiles, balls)
    grids = sorted(per_grid)
    cmax = {}
    for cells in grids:
        rows = [r for r in per_grid[cells] if r["quantile"] != "max"]
        cmax[cells] = {str(sg): max(r["c"] for r in rows if r["sigma"] == sg) for sg in sigmas}
    finite = all(_finite(r["c"]) for cells in grids for r in per_grid[cells])
    max_rows_zero = all(r["lhs"] == 0.0 for cells in grids for r in per_grid[cells] if r["quantile"] == "max")
    stable = True
    if len(grids) >= 2:
        a, b = cmax[grids[-2]], cmax[grids[-1]]
        stable = all(max(a[k], b[k]) / min(a[k], b[k]) < 2 for k in a if min(a[k], b[k]) > 0)
    return {
        "passed": bool(finite and max_rows_zero and stable),
        "c_max": {str(k): v for k, v in cmax.items()},
        "rows": {str(k): v for k, v in per_grid.items()},
    }


def _degiorgi(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.params)
    sigma = params.pop("sigma", 0.25)
    count = params.pop("count", 20)
    cells = cfg.grids[0] if cfg.grids else 64
    sol = disk_problem(cells, **params)
    w = sol.Du.component(0)
    reps = [degiorgi_bound_check(w, sol.mu, x, cfg.R, sigma) for x in sunflower_points(count, 0.55)]
    const = ScalarField(sol.grid, np.full(sol.grid.shape, 1.7))
    zero = RadonMeasure.zero([-1.0, -1.0], [1.0, 1.0])
    c_const = degiorgi_bound_check(const, zero, (0.1, 0.0), cfg.R, sigma).c
    cs = [r.c for r in reps]
    return {
        "passed": bool(all(_finite(c) for c in cs) and c_const == 1.0),
        "c": cs,
        "c_max": max(cs),
        "constant_field_c": c_const,
        "reports": [r.to_dict() for r in reps],
    }


def _heat(cfg: ExperimentConfig) -> dict:
    grids = cfg.grids or [150, 300]
    x0, t0 = 0.5, 0.04
    phi = float(heat_kernel(x0, t0))
    dphi = abs(x0) / (2 * t0) * phi
    out: dict[str, Any] = {"oracle_u": phi, "oracle_grad": dphi, "grids": grids}
    grad_c, zero_c = [], []
    for cells in grids:
        sol = heat_problem(cells)
        out.setdefault("u", []).append(sol.u.at([x0, t0]))
        out.setdefault("grad", []).append(float(np.linalg.norm(sol.Du.at([x0, t0]))))
        grad_c.append(measure_estimate(sol, "parabolic-grad", None, cfg.R).c_max)
        zero_c.append(measure_estimate(sol, "parabolic-zero", None, cfg.R).c_max)
    out["grad_c_max"], out["zero_c_max"] = grad_c, zero_c
    lhs_ok = abs(out["u"][-1] - phi) <= 0.05 * phi and abs(out["grad"][-1] - dphi) <= 0.05 * dphi
    stable = all(max(c[-2:]) / min(c[-2:]) < 2 for c in (grad_c, zero_c))
    out["causality"] = backward_causality_check(grids[0])
    out["passed"] = bool(lhs_ok and stable and out["causality"])
    return out


def backward_causality_check(cells: int = 150, t0: float = 0.04, t_late: float = 0.1) -> bool:
    """Adding mass after t0 must leave u(., t <= t0) bitwise unchanged."""
    grid = Grid.spacetime([-3.0], [3.0], cells, -1.0, 0.2)
    box = ([-3.0, -1.0], [3.0, 0.2])
    base = RadonMeasure.dirac([0.0, 0.0], *box, time=True)
    late = base + RadonMeasure.dirac([0.3, t_late], *box, weight=5.0, time=True)
    a = ParabolicVectorField()
    u1 = solve_parabolic(a, base, grid).values
    u2 = solve_parabolic(a, late, grid).values
    upto = grid.times() <= t0 + 1e-12
    return bool(np.array_equal(u1[..., upto], u2[..., upto]))


def _negative_controls(cfg: ExperimentConfig) -> dict:
    from .coefficients import Dip

    jump = check_structure(StructuredVectorField(p=2.0, kappa=Jump(1.0, 2.0)), 1000, n=2, seed=cfg.seed)
    dip = check_parabolic_structure(ParabolicVectorField(kappa=Dip(1.0, 2.0)), 1000, n=1, seed=cfg.seed)
    study = refinement_study(
        lambda cells: measure_estimate(disk_problem(cells, p=3.0, max_iter=1, strict=False), "grad-p"),
        [32, 64],
        "grad-p",
    )
    return {
        "passed": bool(not jump.passed and jump.witness and not dip.passed and dip.witness and not study.passed),
        "jump_coefficient": jump.to_dict(),
        "negative_dip": dip.to_dict(),
        "unconverged_refinement": study.to_dict(),
    }


RUNNERS: dict[str, Callable[[ExperimentConfig], dict]] = {
    "refinement": _run_refinement,
    "closed-form": _closed_form,
    "poisson-free": _poisson_free,
    "domination": _domination,
    "mapping": _mapping,
    "caccioppoli-sweep": _caccioppoli_sweep,
    "degiorgi": _degiorgi,
    "heat": _heat,
    "negative-controls": _negative_controls,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    start = time.perf_counter()
    result = RUNNERS[cfg.kind](cfg)
    passed = bool(result.pop("passed"))
    # "timing" is the only non-deterministic entry of a result
    return {"name": cfg.name, "config": cfg.to_dict(), "passed": passed, "result": result, "timing": {"seconds": time.perf_counter() - start}}
