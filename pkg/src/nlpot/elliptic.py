"""Dirichlet problems -div a(x, Du) = mu with p-growth vector fields.

The model field is a(x, z) = kappa(x) (|z|^2 + s^2)^((p-2)/2) z.  It is
discretised with P1 elements on the Kuhn triangulation (the 5/7-point
stencil for p = 2) and solved by damped Newton on the convex energy with
the regularisation (|z|^2 + s^2 + eps^2), eps continued down to
``eps_final``.  Measures enter through hat-split nodal loads.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla
from scipy import integrate

from .coefficients import Constant, Modulus
from .field import Grid, ScalarField
from .measure import RadonMeasure
from .mesh import KuhnMesh, hat_split

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual_history: Sequence[float]):
        super().__init__(message)
        self.residual_history = list(residual_history)


@dataclass(frozen=True)
class StructuredVectorField:
    """a(x, z) = kappa(x) (|z|^2 + s^2)^((p-2)/2) z with its structure constants."""

    p: float = 2.0
    s: float = 0.0
    nu: float = 1.0
    L: float | None = None
    L1: float = 1.0
    kappa: object = field(default_factory=Constant)
    theta: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not (0 < self.nu <= 1):
            raise ValueError("nu must lie in (0, 1]")
        if self.L1 < 1:
            raise ValueError("L1 must be >= 1")
        if self.L is None:
            object.__setattr__(self, "L", max(1.0, self.p * self.kappa.bounds()[1]))
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.alpha is not None and self.p > 2 and not (0 < self.alpha < min(1.0, self.p - 2)):
            raise ValueError("alpha must lie in (0, min(1, p-2))")

    @property
    def omega(self) -> Modulus:
        return Modulus(self.theta)

    def flux(self, x, z) -> np.ndarray:
        z = np.atleast_2d(z)
        w = self.kappa(x) * (np.sum(z * z, axis=1) + self.s**2) ** ((self.p - 2) / 2)
        return w[:, None] * z

    def jacobian(self, x, z) -> np.ndarray:
        z = np.atleast_2d(z)
        t = np.sum(z * z, axis=1) + self.s**2
        k = self.kappa(x)
        n = z.shape[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = np.where(t[:, None, None] > 0, z[:, :, None] * z[:, None, :] / t[:, None, None], 0.0)
        return (k * t ** ((self.p - 2) / 2))[:, None, None] * (np.eye(n)[None] + (self.p - 2) * outer)


def p_laplacian(p: float, s: float = 0.0, **kw) -> StructuredVectorField:
    """The prototype field (kappa = 1) with the smallest admissible L."""
    return StructuredVectorField(p=p, s=s, **kw)


@dataclass(frozen=True)
class SolverConfig:
    """Newton continuation settings.

    ``eps_ladder`` lists regularisation levels relative to the characteristic
    gradient of the linear problem; ``eps_final`` is the last level.
    ``tol`` bounds the residual sup-norm relative to the data scale.  With
    ``strict=False`` an unconverged solve returns its last iterate.
    """

    eps_ladder: tuple[float, ...] = (1.0, 1e-1, 1e-2, 1e-4)
    eps_final: float = 1e-8
    tol: float = 1e-8
    stage_tol: float = 1e-4
    max_iter: int = 60
    damping: float = 1.0
    strict: bool = True

    def __post_init__(self):
        ladder = list(self.eps_ladder) + [self.eps_final]
        if any(b > a for a, b in zip(ladder, ladder[1:])) or self.eps_final < 0:
            raise ValueError("eps ladder must decrease to eps_final >= 0")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """The whole grid box."""

    def mask(self, points: np.ndarray) -> np.ndarray:
        return np.ones(points.shape[0], dtype=bool)


def _linear_solve(A, b, dim: int = 2):
    # sparse LU in 1D/2D and for tiny systems, AMG-preconditioned CG in 3D;
    # both are deterministic for a fixed thread count
    if dim <= 2 or A.shape[0] <= 2_000:
        return spla.spsolve(A.tocsc(), b)
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    x = ml.solve(b, tol=1e-12, accel="cg", maxiter=500)
    return x


def nodal_load(mu: RadonMeasure, grid: Grid) -> np.ndarray:
    """Hat-split every carrier of ``mu`` (atoms and density cells) onto nodes."""
    pts, m, _ = mu.carriers("signed")
    return hat_split(grid, pts, m).ravel()


class _Problem:
    """Discrete regularised energy restricted to the free nodes."""

    def __init__(self, a: StructuredVectorField, mesh: KuhnMesh, load, free, fixed_values):
        self.a = a
        self.mesh = mesh
        self.load = load
        self.free = free
        self.fixed = fixed_values
        self.kappa = a.kappa(mesh.barycenters)

    def _w(self, t, eps):
        p = self.a.p
        base = t + self.a.s**2 + eps**2
        w = self.kappa * base ** ((p - 2) / 2)
        if p == 2:
            return w, np.zeros_like(t)
        with np.errstate(divide="ignore"):
            # inf where the gradient and eps vanish; only reached for eps = 0
            dw = self.kappa * (p - 2) / 2 * base ** ((p - 4) / 2)
        return w, dw

    def energy(self, u, eps):
        g = self.mesh.gradients(u)
        base = np.sum(g * g, axis=1) + self.a.s**2 + eps**2
        e = self.mesh.volume * np.sum(self.kappa * base ** (self.a.p / 2)) / self.a.p
        return e - float(np.dot(self.load, u))

    def residual(self, u, eps):
        g = self.mesh.gradients(u)
        w, _ = self._w(np.sum(g * g, axis=1), eps)
        return self.mesh.assemble_vector(w[:, None] * g) - self.load

    def hessian(self, u, eps):
        g = self.mesh.gradients(u)
        w, dw = self._w(np.sum(g * g, axis=1), eps)
        if self.a.p == 2:
            return self.mesh.assemble_matrix(w)
        n = self.mesh.n
        C = w[:, None, None] * np.eye(n)[None] + 2 * dw[:, None, None] * g[:, :, None] * g[:, None, :]
        return self.mesh.assemble_matrix(C)

    def picard_matrix(self, u, eps):
        g = self.mesh.gradients(u)
        w, _ = self._w(np.sum(g * g, axis=1), eps)
        return self.mesh.assemble_matrix(w)


def _newton(prob: _Problem, u, eps, tol_abs, cfg: SolverConfig, history: list[float]) -> tuple[np.ndarray, bool]:
    free = prob.free
    for _ in range(cfg.max_iter):
        r = prob.residual(u, eps)
        res = float(np.max(np.abs(r[free]))) if free.any() else 0.0
        history.append(res)
        if res <= tol_abs:
            return u, True
        H = prob.hessian(u, eps)[free][:, free]
        du = np.zeros_like(u)
        du[free] = -_linear_solve(H, r[free], prob.mesh.n)
        e0 = prob.energy(u, eps)
        slope = float(np.dot(r, du))
        step = cfg.damping
        while step > 1e-10:
            trial = u + step * du
            if prob.energy(trial, eps) <= e0 + 1e-4 * step * slope + 1e-12 * abs(e0):
                break
            step *= 0.5
        else:
            # Newton stalled: one lagged-coefficient (Picard) step instead
            A = prob.picard_matrix(u, eps)
            rhs = prob.load[free] - (A @ _fixed_only(u, free))[free]
            trial = u.copy()
            trial[free] = _linear_solve(A[free][:, free], rhs, prob.mesh.n)
        u = trial
    r = prob.residual(u, eps)
    history.append(float(np.max(np.abs(r[free]))) if free.any() else 0.0)
    return u, history[-1] <= tol_abs


def _fixed_only(u, free):
    v = u.copy()
    v[free] = 0.0
    return v


def solve_dirichlet(
    a: StructuredVectorField,
    mu: RadonMeasure,
    grid: Grid,
    cfg: SolverConfig | None = None,
    *,
    domain=None,
    boundary: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ScalarField:
    """Solve -div a(x, Du) = mu on ``domain`` with u = boundary (default 0) outside.

    ``domain`` is any object with a ``mask(points)`` method (e.g. ``Ball``);
    nodes outside it and on the box faces are Dirichlet nodes.  The returned
    field carries convergence information in ``meta``.
    """
    cfg = cfg or SolverConfig()
    if mu.time:
        raise ValueError("elliptic solver needs a spatial measure")
    if mu.n != grid.n:
        raise ValueError("measure and grid dimensions differ")
    domain = domain or BoxDomain()
    mesh = KuhnMesh(grid)
    pts = grid.points()
    free = domain.mask(pts) & ~mesh.boundary_nodes()
    fixed = np.zeros(grid.size)
    if boundary is not None:
        fixed[~free] = boundary(pts[~free])
    load = nodal_load(mu, grid)
    load[~free] = 0.0
    prob = _Problem(a, mesh, load, free, fixed)
    history: list[float] = []

    r0 = prob.residual(fixed, 0.0 if a.p == 2 else 1.0)
    scale = max(float(np.max(np.abs(load))), float(np.max(np.abs(r0[free]))) if free.any() else 0.0)
    if scale == 0.0 or not free.any():
        return ScalarField(grid, fixed.reshape(grid.shape), {"converged": True, "iterations": 0, "residual_history": []})
    tol_abs = cfg.tol * scale

    # linear problem with the same coefficient: exact for p = 2, initial guess otherwise
    lin = _Problem(StructuredVectorField(p=2.0, kappa=a.kappa), mesh, load, free, fixed)
    A = lin.hessian(fixed, 0.0)
    u = fixed.copy()
    u[free] = _linear_solve(A[free][:, free], load[free] - (A @ fixed)[free], grid.n)
    converged = True
    if a.p != 2:
        g = np.linalg.norm(mesh.gradients(u), axis=1)
        active = g[g > 0]
        gstar = float(np.median(active)) if active.size else 1.0
        u = fixed + (u - fixed) * gstar ** (1.0 / (a.p - 1.0) - 1.0)
        levels = [e * gstar for e in cfg.eps_ladder] + [cfg.eps_final * gstar]
        for i, eps in enumerate(levels):
            last = i == len(levels) - 1
            u, converged = _newton(prob, u, eps, tol_abs if last else max(tol_abs, cfg.stage_tol * scale), cfg, history)
            log.debug("eps=%.3g residual=%.3g", eps, history[-1] if history else 0.0)
        eps_used = levels[-1]
    else:
        r = prob.residual(u, 0.0)
        history.append(float(np.max(np.abs(r[free]))))
        converged = history[-1] <= tol_abs
        eps_used = 0.0
    meta = {
        "converged": bool(converged),
        "iterations": len(history),
        "residual_history": history,
        "residual": history[-1] if history else 0.0,
        "tolerance": tol_abs,
        "eps_final": eps_used,
    }
    if not converged and cfg.strict:
        raise ConvergenceError(f"Newton continuation did not reach residual {tol_abs:.3g}", history)
    return ScalarField(grid, u.reshape(grid.shape), meta)


def boundary_flux(a: StructuredVectorField, u: ScalarField, free_mask: np.ndarray, eps: float = 0.0) -> float:
    """Total discrete flux leaving through the Dirichlet nodes.

    Equals the load on the free nodes when the discrete equation holds
    (discrete divergence theorem).
    """
    mesh = KuhnMesh(u.grid)
    prob = _Problem(a, mesh, np.zeros(u.grid.size), free_mask.ravel(), u.values.ravel())
    r = prob.residual(u.values.ravel(), eps)
    return float(-np.sum(r[~free_mask.ravel()]))


def free_nodes(grid: Grid, domain=None) -> np.ndarray:
    domain = domain or BoxDomain()
    mesh = KuhnMesh(grid)
    return (domain.mask(grid.points()) & ~mesh.boundary_nodes()).reshape(grid.shape)


# -- structure conditions ------------------------------------------------------

@dataclass
class StructureReport:
    passed: bool
    samples: int
    nu_hat: float
    L_hat: float
    L1_hat: float
    holder_hat: float | None = None
    monotone_hat: float | None = None
    violations: list[str] = field(default_factory=list)
    witness: dict | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_structure(
    a: StructuredVectorField,
    sample_count: int = 1000,
    *,
    n: int = 2,
    box: float = 1.0,
    seed: int = 0,
    rtol: float = 1e-9,
) -> StructureReport:
    """Sample growth, ellipticity, x-continuity (and the z-Hoelder bound for p > 2).

    Points x, x0 are drawn in [-box, box]^n, partly as close pairs so the
    continuity line sees small |x - x0|.  Measured constants are the tightest
    ones consistent with the samples.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)
    N = sample_count
    x = rng.uniform(-box, box, (N, n))
    close = rng.random(N) < 0.5
    x0 = np.where(close[:, None], x + rng.normal(0, 1e-3, (N, n)), rng.uniform(-box, box, (N, n)))
    z = rng.normal(size=(N, n)) * np.exp(rng.uniform(-4, 4, (N, 1)))
    lam = rng.normal(size=(N, n))
    p, s = a.p, a.s
    t = np.sum(z * z, axis=1) + s**2
    Az = a.jacobian(x, z)
    quad = np.einsum("ni,nij,nj->n", lam, Az, lam)
    ell = quad / (t ** ((p - 2) / 2) * np.sum(lam * lam, axis=1))
    growth = (np.linalg.norm(a.flux(x, z), axis=1) + np.linalg.norm(Az, ord=2, axis=(1, 2)) * np.sqrt(t)) / t ** ((p - 1) / 2)
    om = a.omega(np.linalg.norm(x - x0, axis=1))
    diff = np.linalg.norm(a.flux(x, z) - a.flux(x0, z), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cont = np.where(diff > 0, diff / (om * t ** ((p - 1) / 2)), 0.0)
    cont = np.nan_to_num(cont, nan=np.inf)
    nu_hat = 1.0 / float(np.min(ell)) if np.min(ell) > 0 else np.inf
    report = StructureReport(True, N, nu_hat, float(np.max(growth)), float(np.max(cont)))
    checks = [
        ("ellipticity", ell < (1.0 / a.nu) * (1 - rtol), np.argmin(ell)),
        ("growth", growth > a.L * (1 + rtol), np.argmax(growth)),
        ("continuity", cont > a.L1 * (1 + rtol), np.argmax(cont)),
    ]
    if p > 2 and a.alpha is not None:
        z2 = z + rng.normal(size=(N, n)) * np.exp(rng.uniform(-6, 2, (N, 1)))
        dz = np.linalg.norm(a.jacobian(x, z2) - Az, ord=2, axis=(1, 2))
        denom = np.linalg.norm(z2 - z, axis=1) ** a.alpha * (
            np.sum(z * z, axis=1) + np.sum(z2 * z2, axis=1) + s**2
        ) ** ((p - 2 - a.alpha) / 2)
        hold = dz / denom
        report.holder_hat = float(np.max(hold))
        checks.append(("hoelder", hold > a.L * (1 + rtol), np.argmax(hold)))
    for name, bad, worst in checks:
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0]) if not bad[worst] else int(worst)
            report.passed = False
            report.violations.append(name)
            if report.witness is None:
                report.witness = {"condition": name, "x": x[i].tolist(), "x0": x0[i].tolist(), "z": z[i].tolist(), "lambda": lam[i].tolist()}
    return report


def dini_integral(omega: Callable, R: float, exponent: float = 1.0, *, blocks: int = 9) -> float:
    """d(R) = int_0^R omega(rho)^exponent drho/rho (exponent = 2/p).

    Integrated in t = log(rho) over dyadic blocks [log R - 2^(k+1), log R - 2^k].
    The block sums of a convergent integral decay at least geometrically;
    when the last block ratios stay above 0.9 the integral is reported as
    ``inf``.  Otherwise the geometric tail estimate is added.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    top = math.log(R)

    def f(t):
        return float(np.asarray(omega(math.exp(t)), dtype=float)) ** exponent

    total, _ = integrate.quad(f, top - 1.0, top, limit=200)
    parts = []
    for k in range(blocks):
        a, b = top - 2.0 ** (k + 1), top - 2.0**k
        val, _ = integrate.quad(f, a, b, limit=200)
        parts.append(val)
    total += sum(parts)
    tail = [v for v in parts[-3:]]
    if tail and tail[-1] > 0:
        ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
        if ratios and min(ratios) >= 0.9:
            return math.inf
        r = ratios[-1] if ratios else 0.0
        if r < 1:
            total += tail[-1] * r / (1 - r)
    return total
