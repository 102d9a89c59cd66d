"""Scalar coefficient fields kappa(x) and kappa(x, t) for the model vector fields.

Each coefficient is a vectorised callable on point arrays of shape (M, n)
(plus a time array for time-dependent ones) and knows its value bounds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Modulus:
    """omega(rho) = min(1, rho**theta); ``theta=0`` gives the constant modulus 1."""

    theta: float = 1.0

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.theta == 0:
            return np.where(rho > 0, 1.0, 0.0)
        return np.minimum(1.0, np.maximum(rho, 0.0) ** self.theta)


@dataclass(frozen=True)
class Constant:
    value: float = 1.0
    time_dependent = False

    def __call__(self, x, t=None):
        return np.full(np.atleast_2d(x).shape[0], float(self.value))

    def bounds(self) -> tuple[float, float]:
        return (self.value, self.value)

    def spec(self) -> str:
        return f"const:{self.value:g}"


@dataclass(frozen=True)
class HolderBump:
    """kappa(x) = base + amplitude * min(1, |x - center|**theta).

    Satisfies |kappa(x) - kappa(y)| <= amplitude * omega(|x - y|) with
    omega = Modulus(theta).
    """

    base: float = 1.0
    amplitude: float = 0.5
    theta: float = 0.5
    center: tuple[float, ...] = (0.0,)

    def __call__(self, x, t=None):
        x = np.atleast_2d(x)
        c = np.zeros(x.shape[1])
        c[: len(self.center)] = self.center[: x.shape[1]]
        r = np.linalg.norm(x - c, axis=1)
        return self.base + self.amplitude * np.minimum(1.0, r**self.theta)

    time_dependent = False

    def bounds(self) -> tuple[float, float]:
        return (self.base, self.base + self.amplitude)

    def spec(self) -> str:
        c = ",".join(f"{v:g}" for v in self.center)
        return f"holder:base={self.base:g},amp={self.amplitude:g},theta={self.theta:g},center={c}"


@dataclass(frozen=True)
class Jump:
    """kappa = low for x[axis] < at, high otherwise (not continuous)."""

    low: float = 1.0
    high: float = 2.0
    axis: int = 0
    at: float = 0.0
    time_dependent = False

    def __call__(self, x, t=None):
        x = np.atleast_2d(x)
        return np.where(x[:, self.axis] < self.at, self.low, self.high)

    def bounds(self) -> tuple[float, float]:
        return (min(self.low, self.high), max(self.low, self.high))

    def spec(self) -> str:
        return f"jump:low={self.low:g},high={self.high:g},axis={self.axis},at={self.at:g}"


@dataclass(frozen=True)
class PiecewiseInTime:
    """kappa(x, t) = values[i] on the i-th interval cut by ``breaks`` (measurable in t)."""

    values: tuple[float, ...] = (1.0, 2.0)
    breaks: tuple[float, ...] = (0.0,)
    time_dependent = True

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("need one more value than break points")

    def __call__(self, x, t=None):
        n = np.atleast_2d(x).shape[0]
        t = np.broadcast_to(np.asarray(0.0 if t is None else t, dtype=float), (n,))
        return np.asarray(self.values)[np.searchsorted(self.breaks, t, side="right")]

    def bounds(self) -> tuple[float, float]:
        return (min(self.values), max(self.values))

    def spec(self) -> str:
        v = ",".join(f"{a:g}" for a in self.values)
        b = ",".join(f"{a:g}" for a in self.breaks)
        return f"piecewise-t:values={v};breaks={b}"


@dataclass(frozen=True)
class Dip:
    """kappa = base - depth inside B(center, width): negative when depth > base."""

    base: float = 1.0
    depth: float = 2.0
    width: float = 0.25
    center: tuple[float, ...] = (0.0,)
    time_dependent = False

    def __call__(self, x, t=None):
        x = np.atleast_2d(x)
        c = np.zeros(x.shape[1])
        c[: len(self.center)] = self.center[: x.shape[1]]
        inside = np.linalg.norm(x - c, axis=1) < self.width
        return np.where(inside, self.base - self.depth, self.base)

    def bounds(self) -> tuple[float, float]:
        return (self.base - self.depth, self.base)

    def spec(self) -> str:
        c = ",".join(f"{v:g}" for v in self.center)
        return f"dip:base={self.base:g},depth={self.depth:g},width={self.width:g},center={c}"


def parse_coefficient(text: str):
    """Parse ``const:1``, ``holder:amp=0.5,theta=0.5``, ``jump:...``, ``dip:...``
    or ``piecewise-t:values=1,2;breaks=0``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "const":
        return Constant(float(rest or 1.0))
    if kind == "piecewise-t":
        parts = dict(item.split("=") for item in rest.split(";") if item)
        return PiecewiseInTime(
            tuple(float(v) for v in parts["values"].split(",")),
            tuple(float(v) for v in parts["breaks"].split(",")),
        )
    kwargs = {}
    for item in _split_kv(rest):
        key, _, val = item.partition("=")
        key = {"amp": "amplitude"}.get(key.strip(), key.strip())
        if key == "center":
            kwargs[key] = tuple(float(v) for v in val.split(","))
        elif key == "axis":
            kwargs[key] = int(val)
        else:
            kwargs[key] = float(val)
    try:
        cls = {"holder": HolderBump, "jump": Jump, "dip": Dip}[kind]
    except KeyError:
        raise ValueError(f"unknown coefficient kind {kind!r}") from None
    return cls(**kwargs)


def _split_kv(text: str) -> list[str]:
    # "a=1,center=0,0,b=2" -> ["a=1", "center=0,0", "b=2"]
    items: list[str] = []
    for tok in text.split(","):
        if not tok:
            continue
        if "=" in tok or not items:
            items.append(tok)
        else:
            items[-1] += "," + tok
    return items
