"""File formats: measure specs (JSON), gridded arrays with a JSON header, CSV tables.

Gridded array files (density grids and fields) are plain text: the first
line is ``# `` followed by a JSON header, the rest is the flat row-major
array, one value per line.  Header keys: ``shape``, ``lo``, ``spacing``
and, for fields, ``time`` and ``components``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .field import Grid, ScalarField, VectorField
from .measure import DensityGrid, RadonMeasure


class FormatError(ValueError):
    """Malformed input file."""


def _read_header(path: Path) -> tuple[dict, np.ndarray]:
    try:
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("#"):
                raise FormatError(f"{path}: missing '# {{...}}' header line")
            header = json.loads(first[1:])
            values = np.loadtxt(fh, dtype=float, ndmin=1)
    except (json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: {exc}") from exc
    return header, values


def _write_array(path: Path, header: dict, values: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, np.ravel(values), fmt="%.17g")


def write_density(path, density: DensityGrid) -> None:
    header = {"shape": list(density.shape), "lo": list(map(float, density.lo)), "spacing": list(map(float, density.cell))}
    _write_array(Path(path), header, density.values)


def read_density(path) -> DensityGrid:
    header, values = _read_header(Path(path))
    try:
        shape = tuple(int(k) for k in header["shape"])
        lo, cell = header["lo"], header["spacing"]
    except KeyError as exc:
        raise FormatError(f"{path}: header lacks {exc}") from None
    if values.size != int(np.prod(shape)):
        raise FormatError(f"{path}: {values.size} values for shape {shape}")
    return DensityGrid(np.asarray(lo, float), np.asarray(cell, float), values.reshape(shape))


def measure_to_spec(mu: RadonMeasure, density_file: str | None = None) -> dict:
    spec = {
        "dimension": mu.n,
        "time": mu.time,
        "box": {"lo": list(map(float, mu.lo)), "hi": list(map(float, mu.hi))},
        "atoms": [list(map(float, pos)) + [float(w)] for pos, w in zip(mu.positions, mu.weights)],
    }
    if mu.resolution is not None:
        spec["resolution"] = float(mu.resolution)
    if density_file is not None:
        spec["density"] = density_file
    return spec


def measure_from_spec(spec: dict, base: Path | None = None) -> RadonMeasure:
    """Build a measure from a spec dict; a density path is relative to ``base``."""
    try:
        n = int(spec["dimension"])
        lo, hi = spec["box"]["lo"], spec["box"]["hi"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"measure spec lacks {exc}") from None
    time = bool(spec.get("time", False))
    d = n + (1 if time else 0)
    try:
        atoms = np.asarray(spec.get("atoms") or np.zeros((0, d + 1)), dtype=float).reshape(-1, d + 1)
    except ValueError as exc:
        raise FormatError(f"atoms must be rows of {d} coordinates and a weight ({exc})") from None
    density = None
    if spec.get("density"):
        path = Path(spec["density"])
        if base is not None and not path.is_absolute():
            path = base / path
        density = read_density(path)
    try:
        return RadonMeasure(
            n, lo, hi, atoms[:, :d], atoms[:, d], density=density, time=time, resolution=spec.get("resolution")
        )
    except ValueError as exc:
        raise FormatError(f"invalid measure: {exc}") from exc


def read_measure(path) -> RadonMeasure:
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return measure_from_spec(spec, path.parent)


def write_measure(path, mu: RadonMeasure) -> None:
    path = Path(path)
    dens_name = None
    if mu.density is not None:
        dens_name = path.stem + ".density.txt"
        write_density(path.parent / dens_name, mu.density)
    path.write_text(json.dumps(measure_to_spec(mu, dens_name), indent=2, sort_keys=True) + "\n")


def write_field(path, w: ScalarField | VectorField) -> None:
    g = w.grid
    header = {
        "shape": list(g.shape),
        "lo": list(g.lo),
        "spacing": list(g.spacing),
        "time": g.time,
        "components": w.ncomp,
    }
    _write_array(Path(path), header, w.values)


def read_field(path) -> ScalarField | VectorField:
    header, values = _read_header(Path(path))
    try:
        grid = Grid(tuple(header["lo"]), tuple(header["spacing"]), tuple(header["shape"]), bool(header.get("time", False)))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad field header ({exc})") from None
    ncomp = int(header.get("components", 1))
    if values.size != ncomp * grid.size:
        raise FormatError(f"{path}: {values.size} values for {ncomp} x {grid.shape}")
    if ncomp == 1:
        return ScalarField(grid, values.reshape(grid.shape), allow_inf=True)
    return VectorField(grid, values.reshape((ncomp,) + grid.shape))


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(columns)
        for row in rows:
            out.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def read_points(path) -> np.ndarray:
    """Points file: CSV or whitespace rows of coordinates, '#' comments allowed."""
    text = Path(path).read_text().replace(",", " ")
    try:
        pts = np.loadtxt(text.splitlines(), dtype=float, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return pts


def to_json(obj) -> str:
    """Deterministic JSON; numpy scalars and arrays are converted, inf/nan kept as strings."""

    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.ndarray):
            return clean(o.tolist())
        if isinstance(o, (np.bool_, bool)):
            return bool(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (float, np.floating)):
            f = float(o)
            if np.isfinite(f):
                return f
            return "nan" if np.isnan(f) else ("inf" if f > 0 else "-inf")
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True)
