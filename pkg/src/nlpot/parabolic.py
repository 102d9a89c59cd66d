"""Backward-Euler solver for u_t - div a(x, t, Du) = mu with p = 2.

a(x, t, z) = kappa(x, t) z + s * offset, where ``offset`` is a constant
vector (|offset| <= 1): it has zero divergence, so it enters the structure
bounds but not the discrete equation.  Each step solves

    M (u^k - u^{k-1}) / dt + K(t_k) u^k = b^k

with the lumped P1 mass M = h^n I and Dirichlet zero data on the box faces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import Constant, Modulus
from .elliptic import StructureReport
from .field import Grid, ScalarField
from .measure import RadonMeasure
from .mesh import KuhnMesh, hat_split


@dataclass(frozen=True)
class ParabolicVectorField:
    s: float = 0.0
    nu: float = 1.0
    L: float | None = None
    L1: float = 1.0
    kappa: object = field(default_factory=Constant)
    theta: float = 1.0
    offset: tuple[float, ...] = ()

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not (0 < self.nu <= 1):
            raise ValueError("nu must lie in (0, 1]")
        if self.offset and np.linalg.norm(self.offset) > 1 + 1e-12:
            raise ValueError("offset vector must have norm <= 1")
        if self.L is None:
            object.__setattr__(self, "L", max(1.0, 2 * self.kappa.bounds()[1] + 1.0))

    @property
    def omega(self) -> Modulus:
        return Modulus(self.theta)

    def _offset(self, n: int) -> np.ndarray:
        e = np.zeros(n)
        e[: len(self.offset)] = self.offset[:n]
        return e

    def flux(self, x, t, z) -> np.ndarray:
        z = np.atleast_2d(z)
        return self.kappa(x, t)[:, None] * z + self.s * self._offset(z.shape[1])[None]

    def jacobian(self, x, t, z) -> np.ndarray:
        z = np.atleast_2d(z)
        return self.kappa(x, t)[:, None, None] * np.eye(z.shape[1])[None]


def time_level(grid: Grid, t) -> np.ndarray:
    """Index of the first time level at or after ``t``.

    Mass at time t is released at that level, so it cannot influence any
    level strictly before t (backward causality).
    """
    t_lo, dt = grid.lo[-1], grid.dt
    k = np.ceil((np.asarray(t, dtype=float) - t_lo) / dt - 1e-9).astype(int)
    return np.clip(k, 1, grid.shape[-1] - 1)


def solve_parabolic(a: ParabolicVectorField, mu: RadonMeasure, grid: Grid) -> ScalarField:
    """Zero initial and lateral data; returns u on the spacetime node grid."""
    if not grid.time:
        raise ValueError("solve_parabolic needs a spacetime grid")
    if not mu.time or mu.n != grid.n:
        raise ValueError("measure must be a spacetime measure of matching dimension")
    space = grid.space()
    mesh = KuhnMesh(space)
    nt = grid.shape[-1]
    dt = grid.dt
    times = grid.times()
    vol = space.h**space.n
    free = ~mesh.boundary_nodes()

    pts, m, _ = mu.carriers("signed")
    t_hi = times[-1]
    loads: dict[int, np.ndarray] = {}
    if m.size:
        active = pts[:, -1] <= t_hi + 1e-12
        levels = time_level(grid, pts[active, -1])
        for k in np.unique(levels):
            sel = levels == k
            loads[int(k)] = hat_split(space, pts[active][sel, :-1], m[active][sel]).ravel() / dt

    u = np.zeros(space.shape + (nt,))
    cur = np.zeros(space.size)
    factor = None
    key = None
    for k in range(1, nt):
        if k not in loads and not cur.any():
            continue
        if a.kappa.time_dependent or factor is None:
            kap = a.kappa(mesh.barycenters, np.full(mesh.num_simplices, times[k]))
            if factor is None or key is None or not np.array_equal(kap, key):
                K = mesh.assemble_matrix(kap)
                A = (K + sp.identity(space.size, format="csr") * (vol / dt))[free][:, free]
                factor = spla.splu(A.tocsc())
                key = kap
        rhs = cur * (vol / dt)
        if k in loads:
            rhs = rhs + loads[k]
        nxt = np.zeros(space.size)
        nxt[free] = factor.solve(rhs[free])
        if not np.all(np.isfinite(nxt)):
            raise RuntimeError(f"linear solve failed at time step {k}")
        cur = nxt
        u[..., k] = cur.reshape(space.shape)
    return ScalarField(grid, u, {"steps": nt - 1, "dt": dt})


def check_parabolic_structure(
    a: ParabolicVectorField,
    samples: int = 1000,
    *,
    n: int = 1,
    box: float = 1.0,
    t_range: tuple[float, float] = (-1.0, 0.0),
    seed: int = 0,
    rtol: float = 1e-9,
) -> StructureReport:
    """Sample the growth, ellipticity, x-continuity and monotonicity conditions."""
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    rng = np.random.default_rng(seed)
    N = samples
    x = rng.uniform(-box, box, (N, n))
    close = rng.random(N) < 0.5
    x0 = np.where(close[:, None], x + rng.normal(0, 1e-3, (N, n)), rng.uniform(-box, box, (N, n)))
    t = rng.uniform(*t_range, N)
    z = rng.normal(size=(N, n)) * np.exp(rng.uniform(-4, 4, (N, 1)))
    z2 = z + rng.normal(size=(N, n)) * np.exp(rng.uniform(-4, 4, (N, 1)))
    lam = rng.normal(size=(N, n))
    s = a.s
    nz = np.linalg.norm(z, axis=1) + s
    Az = a.jacobian(x, t, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = (np.linalg.norm(a.flux(x, t, z), axis=1) + np.linalg.norm(Az, ord=2, axis=(1, 2)) * nz) / nz
        ell = np.einsum("ni,nij,nj->n", lam, Az, lam) / np.sum(lam * lam, axis=1)
        diff = np.linalg.norm(a.flux(x, t, z) - a.flux(x0, t, z), axis=1)
        cont = np.where(diff > 0, diff / (a.omega(np.linalg.norm(x - x0, axis=1)) * nz), 0.0)
        dz = z2 - z
        mono = np.sum((a.flux(x, t, z2) - a.flux(x, t, z)) * dz, axis=1) / np.sum(dz * dz, axis=1)
    cont = np.nan_to_num(cont, nan=np.inf)
    report = StructureReport(
        True,
        N,
        1.0 / float(np.min(ell)) if np.min(ell) > 0 else math.inf,
        float(np.max(growth)),
        float(np.max(cont)),
        monotone_hat=float(np.min(mono)),
    )
    checks = [
        ("ellipticity", ell < a.nu * (1 - rtol), np.argmin(ell)),
        ("growth", growth > a.L * (1 + rtol), np.argmax(growth)),
        ("continuity", cont > a.L1 * (1 + rtol), np.argmax(cont)),
        ("monotonicity", mono < a.nu * (1 - rtol), np.argmin(mono)),
    ]
    for name, bad, worst in checks:
        if np.any(bad):
            i = int(worst)
            report.passed = False
            report.violations.append(name)
            if report.witness is None:
                report.witness = {
                    "condition": name,
                    "x": x[i].tolist(),
                    "x0": x0[i].tolist(),
                    "t": float(t[i]),
                    "z": z[i].tolist(),
                    "z2": z2[i].tolist(),
                }
    return report
