"""Gagliardo seminorms, level truncations and Caccioppoli-type checks.

All integrals use the node-cell rule of ``field``: every node carries the
cell of volume h^n centred on it, and a region is the set of nodes strictly
inside it.  The seminorm is the pair sum over distinct cells

    [w]_{alpha,q;A} = sum_{i != j} |w_i - w_j|^q / |x_i - x_j|^(n + alpha q) * h^(2n).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .field import Ball, Grid, ScalarField, VectorField, _region_mask, ball_average, ball_mask, gradient
from .measure import RadonMeasure
from .potential import truncated_riesz


def _ratio(lhs: float, rhs: float) -> float:
    # 0/0 -> 0; positive over zero -> inf
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return lhs / rhs


def _values(w) -> np.ndarray:
    if isinstance(w, VectorField):
        return w.magnitude()
    if isinstance(w, ScalarField):
        return w.values
    raise TypeError("expected a ScalarField or VectorField")


def truncate(w, k: float, sign: str = "+") -> ScalarField:
    """(w - k)_+ = max(w - k, 0) or (w - k)_- = max(k - w, 0)."""
    if k < 0:
        raise ValueError("truncation level must be >= 0")
    v = _values(w)
    if sign == "+":
        out = np.maximum(v - k, 0.0)
    elif sign == "-":
        out = np.maximum(k - v, 0.0)
    else:
        raise ValueError("sign must be '+' or '-'")
    return ScalarField(w.grid, out, w.meta)


def abs_truncate(w, k: float) -> ScalarField:
    """(|w| - k)_+, the quantity in the non-local Caccioppoli inequality."""
    if k < 0:
        raise ValueError("truncation level must be >= 0")
    return ScalarField(w.grid, np.maximum(np.abs(_values(w)) - k, 0.0), w.meta)


def gagliardo_seminorm(w, alpha: float, q: float = 1.0, region=None, *, chunk: int = 256) -> float:
    """Pair-sum Gagliardo seminorm over the cells of ``region``.

    ``region`` is None (whole grid), a Ball or a boolean mask.  The diagonal
    pairs are excluded; distinct cells are at least h apart.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if q < 1:
        raise ValueError("q must be >= 1")
    g = w.grid
    if g.time:
        raise ValueError("seminorms are defined on spatial fields")
    mask = _region_mask(g, region).ravel()
    if mask.sum() < 2:
        raise ValueError("region must contain at least two cells")
    pts = g.points()[mask]
    vals = _values(w).ravel()[mask]
    expo = -(g.n + alpha * q) / 2.0
    total = 0.0
    for i in range(0, vals.size, chunk):
        d2 = np.sum((pts[i : i + chunk, None, :] - pts[None, :, :]) ** 2, axis=-1)
        diff = np.abs(vals[i : i + chunk, None] - vals[None, :])
        if q != 1:
            diff = diff**q
        with np.errstate(divide="ignore"):
            kern = np.where(d2 > 0, d2**expo, 0.0)
        total += float(np.sum(diff * kern))
    return total * g.cell_volume**2


@dataclass
class CaccioppoliReport:
    sigma: float | None
    k: float
    center: tuple[float, ...]
    radius: float
    lhs: float
    rhs_average: float
    rhs_measure: float
    c: float

    def to_dict(self) -> dict:
        return asdict(self)


def _ball_integral(v: np.ndarray, grid: Grid, x0, R: float) -> float:
    if not grid.contains_ball(x0, R):
        raise ValueError("ball exits the field region")
    return float(np.sum(v[ball_mask(grid, x0, R)]) * grid.cell_volume)


def caccioppoli_classic(w: ScalarField, k: float, center, R: float) -> CaccioppoliReport:
    """int_{B_{R/2}} |D(w - k)_+|^2  against  R^-2 int_{B_R} (w - k)_+^2.

    Diagnostic baseline; ``w`` is one gradient component of a solution.
    """
    if not w.grid.contains_ball(center, R):
        raise ValueError("ball exits the field region")
    t = ScalarField(w.grid, np.maximum(w.values - k, 0.0))
    dt = gradient(t)
    lhs = _ball_integral(dt.magnitude() ** 2, w.grid, center, R / 2)
    rhs = _ball_integral(t.values**2, w.grid, center, R) / R**2
    return CaccioppoliReport(None, k, tuple(np.ravel(center).tolist()), R, lhs, rhs, 0.0, _ratio(lhs, rhs))


def caccioppoli_nonlocal(w, mu: RadonMeasure, center, R: float, sigma: float, k: float = 0.0) -> CaccioppoliReport:
    """Both sides of the non-local Caccioppoli inequality on B(center, R).

    lhs  = [(|w| - k)_+]_{sigma,1;B_{R/2}}
    rhs1 = R^-sigma int_{B_R} (|w| - k)_+
    rhs2 = R^(1 - sigma) |mu|(B_R)
    """
    if not (0 < sigma < 0.5):
        raise ValueError("sigma must lie in (0, 1/2)")
    if k < 0:
        raise ValueError("k must be >= 0")
    g = w.grid
    if not g.contains_ball(center, R):
        raise ValueError("ball exits the field region")
    t = abs_truncate(w, k)
    lhs = gagliardo_seminorm(t, sigma, 1.0, Ball(center, R / 2)) if t.values.any() else 0.0
    rhs1 = _ball_integral(t.values, g, center, R) / R**sigma
    rhs2 = R ** (1 - sigma) * mu.ball_mass(np.ravel(center)[: mu.n], R, "total")
    return CaccioppoliReport(sigma, k, tuple(np.ravel(center).tolist()), R, lhs, rhs1, rhs2, _ratio(lhs, rhs1 + rhs2))


@dataclass
class DeGiorgiReport:
    center: tuple[float, ...]
    radius: float
    lhs: float
    rhs_average: float
    rhs_potential: float
    c: float
    levels: list[float] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    excess: list[float] = field(default_factory=list)
    caccioppoli_c: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def level_ladder(w, center, R: float, count: int, top: float | None = None) -> np.ndarray:
    """k_j = top * (1 - 2^-j), top defaulting to the 99th percentile of |w| on B(center, 2R)."""
    if top is None:
        vals = np.abs(_values(w))[ball_mask(w.grid, center, 2 * R)]
        top = float(np.percentile(vals, 99)) if vals.size else 0.0
    return top * (1.0 - 2.0 ** -np.arange(count))


def degiorgi_bound_check(
    w,
    mu: RadonMeasure,
    center,
    R: float,
    sigma: float,
    levels: int | np.ndarray = 4,
) -> DeGiorgiReport:
    """Check |w(x0)| <= c (avg_{B(x0,R)} |w| + I_1^{|mu|}(x0, 2R)) and record diagnostics.

    On the dyadic balls B_j = B(x0, 2R 2^-j) the excess E_j = avg_{B_j} (|w| - k_j)_+
    and the non-local Caccioppoli constant at (sigma, k_j) are reported for the
    level ladder k_j.  Balls with fewer than two cells in B_j/2 are skipped.
    """
    g = w.grid
    x0 = np.ravel(np.asarray(center, dtype=float))
    if not g.contains_ball(x0, 2 * R):
        raise ValueError("base point closer than 2R to the boundary")
    lhs = abs(float(_values(w)[g.nearest_index(x0)]))
    rhs1 = ball_average(w, x0, R, 1.0)
    rhs2 = truncated_riesz(mu, 1.0, x0, 2 * R) if not mu.is_zero else 0.0
    ks = level_ladder(w, x0, R, levels) if np.isscalar(levels) else np.asarray(levels, dtype=float)
    rep = DeGiorgiReport(tuple(x0.tolist()), R, lhs, rhs1, rhs2, _ratio(lhs, rhs1 + rhs2), levels=ks.tolist())
    for j, k in enumerate(ks):
        Rj = 2 * R * 2.0**-j
        if np.count_nonzero(ball_mask(g, x0, Rj / 2)) < 2:
            break
        rep.radii.append(Rj)
        rep.excess.append(ball_average(abs_truncate(w, k), x0, Rj, 1.0))
        rep.caccioppoli_c.append(caccioppoli_nonlocal(w, mu, x0, Rj, sigma, k).c)
    return rep
