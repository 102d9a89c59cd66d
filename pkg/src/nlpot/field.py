"""Fields on uniform node grids, with gradients, integral averages and norms.

Every node stands for the cell of volume ``prod(spacing)`` centred on it;
integrals over balls and cylinders sum the cells whose centre lies strictly
inside, the same rule the measures use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .measure import BackwardCylinder, RadonMeasure


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node grid on a box.

    ``shape`` counts nodes per axis.  For spacetime grids (``time=True``) the
    last axis is time with its own spacing; the spatial axes share one
    spacing ``h``.
    """

    lo: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]
    time: bool = False

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        if not (len(lo) == len(spacing) == len(shape)):
            raise ValueError("lo, spacing and shape must have equal length")
        if any(s <= 0 for s in spacing):
            raise ValueError("grid spacing must be positive")
        if any(k < 2 for k in shape):
            raise ValueError("need at least two nodes per axis")
        ns = len(shape) - (1 if self.time else 0)
        if ns < 1:
            raise ValueError("grid needs a spatial axis")
        if not np.allclose(spacing[:ns], spacing[0]):
            raise ValueError("spatial axes must share one spacing")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def box(cls, lo, hi, cells: int) -> "Grid":
        """Spatial grid on [lo, hi] with ``cells`` intervals on the longest axis."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        h = float(np.max(hi - lo)) / cells
        counts = np.rint((hi - lo) / h).astype(int)
        if not np.allclose(counts * h, hi - lo):
            raise ValueError("box sides must be commensurate with the spacing")
        return cls(tuple(lo), (h,) * lo.size, tuple(counts + 1))

    @classmethod
    def spacetime(cls, lo, hi, cells: int, t_lo: float, t_hi: float, dt: float | None = None) -> "Grid":
        """Spacetime grid; ``dt`` defaults to h**2 (parabolic scaling)."""
        space = cls.box(lo, hi, cells)
        h = space.h
        dt = h * h if dt is None else dt
        nt = int(round((t_hi - t_lo) / dt))
        if nt < 1 or not np.isclose(nt * dt, t_hi - t_lo):
            raise ValueError("time interval must be a multiple of dt")
        return cls(space.lo + (float(t_lo),), space.spacing + (float(dt),), space.shape + (nt + 1,), time=True)

    @property
    def n(self) -> int:
        """Spatial dimension."""
        return len(self.shape) - (1 if self.time else 0)

    @property
    def h(self) -> float:
        return self.spacing[0]

    @property
    def dt(self) -> float:
        if not self.time:
            raise AttributeError("spatial grid has no time step")
        return self.spacing[-1]

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(l + s * (k - 1) for l, s, k in zip(self.lo, self.spacing, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self) -> list[np.ndarray]:
        return [l + s * np.arange(k) for l, s, k in zip(self.lo, self.spacing, self.shape)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape (size, ndim), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def space(self) -> "Grid":
        if not self.time:
            return self
        return Grid(self.lo[:-1], self.spacing[:-1], self.shape[:-1])

    def times(self) -> np.ndarray:
        return self.axes()[-1]

    def nearest_index(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=float).ravel()
        idx = np.rint((x - np.array(self.lo)) / np.array(self.spacing)).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            raise ValueError(f"point {x} outside the grid")
        return tuple(int(i) for i in idx)

    def node(self, index) -> np.ndarray:
        return np.array(self.lo) + np.array(index) * np.array(self.spacing)

    def cell_measure(self, values, resolution: float | None = None) -> RadonMeasure:
        """Density measure whose cells are centred on the grid nodes."""
        sp = np.array(self.spacing)
        lo = np.array(self.lo) - sp / 2
        hi = np.array(self.hi) + sp / 2
        return RadonMeasure.from_density(values, lo, hi, time=self.time, resolution=resolution or self.h)

    def contains_ball(self, x0, R: float) -> bool:
        x0 = np.asarray(x0, dtype=float).ravel()[: self.n]
        lo = np.array(self.lo[: self.n])
        hi = np.array(self.hi[: self.n])
        tol = 1e-9 * self.h
        return bool(np.all(x0 - R >= lo - tol) and np.all(x0 + R <= hi + tol))


@dataclass(frozen=True, eq=False)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def mask(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - np.array(self.center), axis=1) < self.radius

    def contains_ball(self, x0, R: float) -> bool:
        d = np.linalg.norm(np.asarray(x0, dtype=float).ravel() - np.array(self.center))
        return bool(d + R <= self.radius + 1e-12)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    meta: Mapping = field(default_factory=dict)
    allow_inf: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        bad = np.isnan(vals) if self.allow_inf else ~np.isfinite(vals)
        if np.any(bad):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def ncomp(self) -> int:
        return 1

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def at(self, x) -> float:
        """Value at the grid node nearest to ``x``."""
        return float(self.values[self.grid.nearest_index(x)])

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.meta)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Spatial vector field; ``values`` has shape (n, *grid.shape)."""

    grid: Grid
    values: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,) + self.grid.shape:
            raise ValueError("vector field needs one component per spatial axis")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i], self.meta)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def norm_field(self) -> ScalarField:
        return ScalarField(self.grid, self.magnitude(), self.meta)

    def at(self, x) -> np.ndarray:
        return self.values[(slice(None),) + self.grid.nearest_index(x)]


def gradient(u: ScalarField) -> VectorField:
    """Second-order central differences inside, one-sided at the boundary.

    For spacetime fields only the spatial axes are differentiated.
    """
    g = u.grid
    if any(k < 3 for k in g.shape[: g.n]):
        raise ValueError("gradient needs at least 3 nodes per axis")
    comps = [np.gradient(u.values, g.h, axis=d, edge_order=1) for d in range(g.n)]
    return VectorField(g, np.stack(comps), u.meta)


def _magnitude(w) -> np.ndarray:
    return w.magnitude() if isinstance(w, (ScalarField, VectorField)) else np.abs(np.asarray(w))


def ball_mask(grid: Grid, x0, R: float) -> np.ndarray:
    pts = grid.points()[:, : grid.n]
    return (np.linalg.norm(pts - np.asarray(x0, dtype=float).ravel(), axis=1) < R).reshape(grid.shape)


def cylinder_mask(grid: Grid, cyl: BackwardCylinder) -> np.ndarray:
    if not grid.time:
        raise ValueError("cylinder averages need a spacetime grid")
    pts = grid.points()
    return cyl.contains(pts[:, :-1], pts[:, -1]).reshape(grid.shape)


def _power_mean(vals: np.ndarray, q: float) -> float:
    if vals.size == 0:
        raise ValueError("no grid cells in the region")
    if q < 1:
        raise ValueError("exponent q must be >= 1")
    if np.all(vals == vals.flat[0]):
        # exact for constant data, avoids summation round-off
        return float(vals.flat[0])
    return float(np.mean(vals**q) ** (1.0 / q))


def ball_average(w, x0, R: float, q: float = 1.0) -> float:
    """( mean over B(x0, R) of |w|^q )^(1/q); vector fields use |w|."""
    grid = w.grid
    if grid.time:
        raise ValueError("use cylinder_average on spacetime fields")
    if not grid.contains_ball(x0, R):
        raise ValueError("ball exits the grid box")
    return _power_mean(_magnitude(w)[ball_mask(grid, x0, R)], q)


def cylinder_average(w, cyl: BackwardCylinder, q: float = 1.0) -> float:
    """Mean of |w|^q over Q(x0, t0; R), to the power 1/q."""
    grid = w.grid
    if cyl.radius < grid.h or cyl.radius**2 < grid.dt:
        raise ValueError("cylinder smaller than one grid cell")
    if not grid.contains_ball(cyl.x0, cyl.radius) or cyl.t_bottom < grid.lo[-1] - 1e-12:
        raise ValueError("cylinder exits the spacetime box")
    return _power_mean(_magnitude(w)[cylinder_mask(grid, cyl)], q)


def _region_mask(grid: Grid, region) -> np.ndarray:
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    if isinstance(region, Ball):
        if not grid.contains_ball(region.center, region.radius):
            raise ValueError("region exits the grid box")
        return ball_mask(grid, region.center, region.radius)
    if isinstance(region, BackwardCylinder):
        return cylinder_mask(grid, region)
    mask = np.asarray(region, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError("mask shape does not match the grid")
    return mask


def linf_norm(w, region=None) -> float:
    vals = _magnitude(w)[_region_mask(w.grid, region)]
    if vals.size == 0:
        raise ValueError("empty region")
    return float(np.max(vals))


def lq_norm(w, q: float, region=None) -> float:
    """(sum over cells in region of |w|^q * cell volume)^(1/q)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    vals = _magnitude(w)[_region_mask(w.grid, region)]
    if vals.size == 0:
        raise ValueError("empty region")
    return float((np.sum(vals**q) * w.grid.cell_volume) ** (1.0 / q))


def point_value(w, x) -> float:
    """|w| at the node nearest to ``x``."""
    return float(_magnitude(w)[w.grid.nearest_index(x)])
