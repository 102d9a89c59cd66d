"""Finite Radon measures on boxes: point atoms plus a cell-centred density.

All mass queries use the cell-centre rule: a density cell contributes its full
mass to a ball (or backward cylinder) iff its centre lies strictly inside.
Atoms are treated the same way, so the atomic part is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

Mode = Literal["signed", "total"]

_MODES = ("signed", "total")


def _check_mode(mode: str) -> None:
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Piecewise-constant density on a uniform cell grid.

    ``lo`` is the lower corner of the first cell, ``cell`` the cell size per
    axis and ``values`` the density (mass per unit volume) on each cell.
    """

    lo: np.ndarray
    cell: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        cell = np.asarray(self.cell, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if lo.ndim != 1 or cell.shape != lo.shape or values.ndim != lo.size:
            raise ValueError("density grid: lo, cell and values dimensions disagree")
        if np.any(cell <= 0):
            raise ValueError("density grid: cell sizes must be positive")
        if not np.all(np.isfinite(values)):
            raise ValueError("density grid: values must be finite")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.cell * np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.cell))

    def centers(self) -> np.ndarray:
        axes = [self.lo[d] + (np.arange(k) + 0.5) * self.cell[d] for d, k in enumerate(self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def same_layout(self, other: "DensityGrid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.lo, other.lo)
            and np.allclose(self.cell, other.cell)
        )


@dataclass(frozen=True)
class BackwardCylinder:
    """Q(x0, t0; R) = B(x0, R) x (t0 - R^2, t0)."""

    x0: tuple[float, ...]
    t0: float
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("cylinder radius must be non-negative")
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    @property
    def t_bottom(self) -> float:
        return self.t0 - self.radius**2

    def contains(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        dist = np.linalg.norm(x - np.asarray(self.x0), axis=1)
        t = np.asarray(t, dtype=float)
        return (dist < self.radius) & (t > self.t_bottom) & (t < self.t0)


@dataclass(frozen=True)
class MassProfile:
    """Sorted distances of mass carriers from a base point with cumulative masses.

    ``mass(rho)`` returns the mass of the carriers at distance strictly less
    than ``rho``; it is a right-continuous step function of ``rho`` evaluated
    with strict inequality (open balls).
    """

    distances: np.ndarray
    cumulative: np.ndarray
    atom_distance: float  # distance to the nearest atom carrying nonzero mass

    def mass(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        idx = np.searchsorted(self.distances, rho, side="left")
        padded = np.concatenate([[0.0], self.cumulative])
        return padded[idx]

    @property
    def nearest(self) -> float:
        return float(self.distances[0]) if self.distances.size else np.inf


@dataclass(frozen=True, eq=False)
class RadonMeasure:
    """Signed measure made of atoms and an optional density on a box.

    For spacetime measures (``time=True``) the last coordinate of every
    position, of ``lo``/``hi`` and of the density grid is time; ``n`` is the
    spatial dimension in both cases.

    ``resolution`` is the length scale below which the measure is not
    resolved; potentials use half of it as the default lower cut-off.  It
    defaults to the smallest spatial cell size of the density grid.
    """

    n: int
    lo: np.ndarray
    hi: np.ndarray
    positions: np.ndarray
    weights: np.ndarray
    density: DensityGrid | None = None
    time: bool = False
    resolution: float | None = None

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        d = self.n + (1 if self.time else 0)
        if lo.size != d or hi.size != d:
            raise ValueError(f"box must have {d} coordinates")
        if np.any(hi <= lo):
            raise ValueError("box must have hi > lo on every axis")
        pos = np.asarray(self.positions, dtype=float).reshape(-1, d)
        w = np.asarray(self.weights, dtype=float).ravel()
        if pos.shape[0] != w.size:
            raise ValueError("one weight per atom required")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(pos)):
            raise ValueError("atoms must have finite positions and weights")
        tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))
        if pos.size and (np.any(pos < lo - tol) or np.any(pos > hi + tol)):
            raise ValueError("atoms must lie inside the domain box")
        if self.density is not None:
            if self.density.lo.size != d:
                raise ValueError("density grid dimension does not match the measure")
        res = self.resolution
        if res is None and self.density is not None:
            res = float(np.min(self.density.cell[: self.n]))
        if res is not None and res <= 0:
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "resolution", res)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, lo, hi, *, time: bool = False, resolution: float | None = None) -> "RadonMeasure":
        lo = np.asarray(lo, dtype=float)
        n = lo.size - (1 if time else 0)
        return cls(n, lo, hi, np.empty((0, lo.size)), np.empty(0), time=time, resolution=resolution)

    @classmethod
    def from_atoms(
        cls,
        positions: Sequence[Sequence[float]],
        weights: Sequence[float],
        lo,
        hi,
        *,
        time: bool = False,
        resolution: float | None = None,
    ) -> "RadonMeasure":
        lo = np.asarray(lo, dtype=float)
        n = lo.size - (1 if time else 0)
        return cls(n, lo, hi, np.asarray(positions, dtype=float), weights, time=time, resolution=resolution)

    @classmethod
    def dirac(cls, position, lo, hi, weight: float = 1.0, **kw) -> "RadonMeasure":
        return cls.from_atoms([position], [weight], lo, hi, **kw)

    @classmethod
    def from_density(
        cls, values, lo, hi, *, time: bool = False, resolution: float | None = None
    ) -> "RadonMeasure":
        """Density covering the box ``[lo, hi]`` with ``values.shape`` cells."""
        values = np.asarray(values, dtype=float)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        cell = (hi - lo) / np.array(values.shape)
        n = lo.size - (1 if time else 0)
        grid = DensityGrid(lo, cell, values)
        return cls(n, lo, hi, np.empty((0, lo.size)), np.empty(0), grid, time, resolution)

    # -- basic properties -------------------------------------------------
    @property
    def dim(self) -> int:
        """Number of coordinates of a point (n, or n + 1 for spacetime)."""
        return self.lo.size

    @property
    def h(self) -> float | None:
        return self.resolution

    def carriers(self, mode: Mode = "total") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, masses and an is-atom flag for every nonzero carrier."""
        _check_mode(mode)
        pts = [self.positions]
        masses = [self.weights]
        atom = [np.ones(self.weights.size, dtype=bool)]
        if self.density is not None:
            vals = self.density.values.ravel() * self.density.cell_volume
            keep = vals != 0
            pts.append(self.density.centers()[keep])
            masses.append(vals[keep])
            atom.append(np.zeros(int(keep.sum()), dtype=bool))
        m = np.concatenate(masses)
        if mode == "total":
            m = np.abs(m)
        keep = m != 0
        return np.concatenate(pts)[keep], m[keep], np.concatenate(atom)[keep]

    def total_variation(self) -> float:
        tv = float(np.sum(np.abs(self.weights)))
        if self.density is not None:
            tv += float(np.sum(np.abs(self.density.values)) * self.density.cell_volume)
        return tv

    def total_mass(self, mode: Mode = "signed") -> float:
        _check_mode(mode)
        if mode == "total":
            return self.total_variation()
        m = float(np.sum(self.weights))
        if self.density is not None:
            m += float(np.sum(self.density.values) * self.density.cell_volume)
        return m

    @property
    def is_zero(self) -> bool:
        return self.total_variation() == 0.0

    def abs(self) -> "RadonMeasure":
        """The total variation measure |mu|."""
        dens = None
        if self.density is not None:
            dens = DensityGrid(self.density.lo, self.density.cell, np.abs(self.density.values))
        return RadonMeasure(
            self.n, self.lo, self.hi, self.positions, np.abs(self.weights), dens, self.time, self.resolution
        )

    def scaled(self, factor: float) -> "RadonMeasure":
        dens = None
        if self.density is not None:
            dens = DensityGrid(self.density.lo, self.density.cell, factor * self.density.values)
        return RadonMeasure(
            self.n, self.lo, self.hi, self.positions, factor * self.weights, dens, self.time, self.resolution
        )

    def __add__(self, other: "RadonMeasure") -> "RadonMeasure":
        if other.time != self.time or other.n != self.n:
            raise ValueError("cannot add measures of different dimensions")
        lo = np.minimum(self.lo, other.lo)
        hi = np.maximum(self.hi, other.hi)
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        elif self.density.same_layout(other.density):
            dens = DensityGrid(self.density.lo, self.density.cell, self.density.values + other.density.values)
        else:
            raise ValueError("densities on different grids cannot be added")
        res = [r for r in (self.resolution, other.resolution) if r is not None]
        return RadonMeasure(
            self.n,
            lo,
            hi,
            np.concatenate([self.positions, other.positions]),
            np.concatenate([self.weights, other.weights]),
            dens,
            self.time,
            min(res) if res else None,
        )

    def with_resolution(self, resolution: float) -> "RadonMeasure":
        return RadonMeasure(
            self.n, self.lo, self.hi, self.positions, self.weights, self.density, self.time, resolution
        )

    # -- queries ------------------------------------------------------------
    def _spatial_point(self, x0) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.size != self.n:
            raise ValueError(f"expected a point with {self.n} coordinates, got {x0.size}")
        return x0

    def ball_mass(self, x0, rho: float, mode: Mode = "total") -> float:
        """mu(B(x0, rho)) (``signed``) or |mu|(B(x0, rho)) (``total``)."""
        if self.time:
            raise ValueError("ball_mass needs a spatial measure; use cylinder_mass")
        if rho < 0:
            raise ValueError("radius must be non-negative")
        x0 = self._spatial_point(x0)
        if np.any(x0 < self.lo - 1e-12) or np.any(x0 > self.hi + 1e-12):
            raise ValueError("base point outside the measure's domain")
        pts, m, _ = self.carriers(mode)
        if not m.size:
            return 0.0
        inside = np.linalg.norm(pts - x0, axis=1) < rho
        return float(np.sum(m[inside]))

    def cylinder_mass(self, cyl: BackwardCylinder, mode: Mode = "total") -> float:
        """Mass of the half-open backward cylinder Q(x0, t0; R)."""
        if not self.time:
            raise ValueError("cylinder_mass needs a spacetime measure")
        pts, m, _ = self.carriers(mode)
        if not m.size:
            return 0.0
        inside = cyl.contains(pts[:, :-1], pts[:, -1])
        return float(np.sum(m[inside]))

    def profile(self, x0, mode: Mode = "total") -> MassProfile:
        """Mass profile rho -> mu(B(x0, rho)) around a spatial point."""
        if self.time:
            raise ValueError("profile needs a spatial measure; use cylinder_profile")
        x0 = self._spatial_point(x0)
        pts, m, atom = self.carriers(mode)
        dist = np.linalg.norm(pts - x0, axis=1) if m.size else np.empty(0)
        return _make_profile(dist, m, atom)

    def cylinder_profile(self, x0, t0: float, mode: Mode = "total") -> MassProfile:
        """Mass profile rho -> mu(Q(x0, t0; rho)).

        A carrier at (x, t) with t < t0 lies in Q(x0, t0; rho) iff its
        parabolic distance max(|x - x0|, sqrt(t0 - t)) is below rho.
        """
        if not self.time:
            raise ValueError("cylinder_profile needs a spacetime measure")
        x0 = self._spatial_point(x0)
        pts, m, atom = self.carriers(mode)
        if not m.size:
            return _make_profile(np.empty(0), m, atom)
        past = pts[:, -1] < t0
        pts, m, atom = pts[past], m[past], atom[past]
        dist = np.maximum(np.linalg.norm(pts[:, :-1] - x0, axis=1), np.sqrt(t0 - pts[:, -1]))
        return _make_profile(dist, m, atom)

    def restrict(self, center, radius: float) -> "RadonMeasure":
        """mu restricted to the open ball B(center, radius) (spatial measures)."""
        if self.time:
            raise ValueError("restrict is defined for spatial measures")
        c = self._spatial_point(center)
        keep = np.linalg.norm(self.positions - c, axis=1) < radius
        dens = None
        if self.density is not None:
            inside = np.linalg.norm(self.density.centers() - c, axis=1) < radius
            vals = np.where(inside.reshape(self.density.shape), self.density.values, 0.0)
            dens = DensityGrid(self.density.lo, self.density.cell, vals)
        return RadonMeasure(
            self.n, self.lo, self.hi, self.positions[keep], self.weights[keep], dens, self.time, self.resolution
        )


def _make_profile(dist: np.ndarray, m: np.ndarray, atom: np.ndarray) -> MassProfile:
    order = np.argsort(dist, kind="stable")
    atom_d = float(np.min(dist[atom])) if np.any(atom) else np.inf
    return MassProfile(dist[order], np.cumsum(m[order]), atom_d)


def ball_mass(mu: RadonMeasure, x0, rho: float, mode: Mode = "total") -> float:
    return mu.ball_mass(x0, rho, mode)


def cylinder_mass(mu: RadonMeasure, cyl: BackwardCylinder, mode: Mode = "total") -> float:
    return mu.cylinder_mass(cyl, mode)


def restrict(mu: RadonMeasure, center, radius: float) -> RadonMeasure:
    return mu.restrict(center, radius)
