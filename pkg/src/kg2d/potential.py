"""Cutoff, cylindrically symmetric potentials and the coupling scaling.

All quantities are in natural units (hbar = c = 1); the mass ``M = 1`` is the
documented default scale.  A potential vanishes identically beyond its cutoff
radius ``r0`` and the family ``V(r, lam) = lam * V(r)`` interpolates between
the free problem (``lam = 0``) and the given potential (``lam = 1``).

Three shapes are supported:

``SquareWell(depth)``
    ``V(r) = -depth`` for ``r <= r0``.  A positive depth is attractive for
    particles (``E > 0``).
``PiecewiseConstant(breakpoints, values)``
    ``values[i]`` on ``[b_{i-1}, b_i)`` with ``b_{-1} = 0`` and the last region
    ending at ``r0``.  ``breakpoints`` are the interior boundaries.
``Tabulated(r, v)``
    Linear interpolation between samples, held constant outside the sampled
    range (up to ``r0``).  Interpolation error is not corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SquareWell:
    depth: float

    kind = "square_well"

    def __post_init__(self):
        if not math.isfinite(self.depth):
            raise DomainError("square_well depth must be finite")

    def values(self, r, r0):
        return np.full(np.shape(r), -float(self.depth))

    def breakpoints(self, r0):
        return ()

    @property
    def is_null(self):
        return self.depth == 0.0


@dataclass(frozen=True)
class PiecewiseConstant:
    breakpoints_: tuple
    values_: tuple

    kind = "piecewise_constant"

    def __init__(self, breakpoints, values):
        object.__setattr__(self, "breakpoints_", tuple(float(b) for b in breakpoints))
        object.__setattr__(self, "values_", tuple(float(v) for v in values))
        if len(self.values_) != len(self.breakpoints_) + 1:
            raise DomainError("piecewise_constant needs len(values) == len(breakpoints) + 1")
        if any(not math.isfinite(v) for v in self.values_ + self.breakpoints_):
            raise DomainError("piecewise_constant entries must be finite")
        if any(b <= 0 for b in self.breakpoints_) or list(self.breakpoints_) != sorted(set(self.breakpoints_)):
            raise DomainError("breakpoints must be positive and strictly increasing")

    def values(self, r, r0):
        idx = np.searchsorted(self.breakpoints_, r, side="right")
        return np.asarray(self.values_)[idx]

    def breakpoints(self, r0):
        return tuple(b for b in self.breakpoints_ if b < r0)

    @property
    def is_null(self):
        return all(v == 0.0 for v in self.values_)


@dataclass(frozen=True)
class Tabulated:
    r: tuple
    v: tuple

    kind = "tabulated"

    def __init__(self, r, v):
        r = tuple(float(x) for x in r)
        v = tuple(float(x) for x in v)
        if len(r) != len(v) or len(r) < 2:
            raise DomainError("tabulated potential needs at least two (r, V) samples")
        if any(b <= a for a, b in zip(r, r[1:])) or r[0] < 0:
            raise DomainError("tabulated radii must be non-negative and strictly increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)

    def values(self, r, r0):
        return np.interp(r, self.r, self.v)

    def breakpoints(self, r0):
        # interpolant kinks; force step boundaries there
        return tuple(x for x in self.r if 0 < x < r0)

    @property
    def is_null(self):
        return all(x == 0.0 for x in self.v)


Shape = Union[SquareWell, PiecewiseConstant, Tabulated]


@dataclass(frozen=True)
class PotentialSpec:
    """Cutoff potential ``V(r)`` with its radius ``r0`` and particle mass.

    Immutable; safe to share between workers.
    """

    shape: Shape
    r0: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.r0) and self.r0 > 0):
            raise DomainError(f"cutoff radius r0 must be positive and finite, got {self.r0}")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise DomainError(f"mass must be positive and finite, got {self.mass}")

    @classmethod
    def square_well(cls, depth, r0=1.0, mass=1.0):
        return cls(SquareWell(float(depth)), float(r0), float(mass))

    @classmethod
    def piecewise_constant(cls, breakpoints, values, r0=1.0, mass=1.0):
        return cls(PiecewiseConstant(breakpoints, values), float(r0), float(mass))

    @classmethod
    def tabulated(cls, r, v, r0=1.0, mass=1.0):
        return cls(Tabulated(r, v), float(r0), float(mass))

    @classmethod
    def free(cls, r0=1.0, mass=1.0):
        return cls.square_well(0.0, r0, mass)

    @property
    def is_null(self):
        return self.shape.is_null

    def breakpoints(self):
        return self.shape.breakpoints(self.r0)

    def unscaled(self, r):
        """``V(r)`` at ``lam = 1``; zero beyond the cutoff.  No argument checks."""
        r = np.asarray(r, dtype=float)
        return np.where(r > self.r0, 0.0, self.shape.values(r, self.r0))


@dataclass(frozen=True)
class Coupling:
    lam: float

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise DomainError(f"coupling must lie in [0, 1], got {self.lam}")


def _coupling_value(lam):
    if isinstance(lam, Coupling):
        return lam.lam
    return Coupling(float(lam)).lam


def evaluate(spec, lam, r):
    """Return ``lam * V(r)``; exactly zero for ``r > r0``.

    Accepts scalar or array ``r``.
    """
    lam = _coupling_value(lam)
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("radius must be finite")
    if np.any(arr < 0):
        raise DomainError("radius must be non-negative")
    out = lam * spec.unscaled(arr)
    out = np.where(arr > spec.r0, 0.0, out)
    return float(out) if np.ndim(r) == 0 else out


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    condition: str | None = None
    radius: float | None = None
    message: str = ""
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


# r|V| near the origin must fall off at least this fast (fitted power of r)
_ORIGIN_MIN_POWER = 0.05


def validate(spec):
    """Check finiteness, the origin condition ``r |V(r)| -> 0`` and the cutoff.

    The report names the first violated condition (``"finite"``,
    ``"origin"`` or ``"cutoff"``) and the offending radius.
    """
    shape = spec.shape
    if isinstance(shape, Tabulated):
        r = np.asarray(shape.r)
        v = np.asarray(shape.v)
        bad = ~np.isfinite(v)
        if bad.any():
            i = int(np.argmax(bad))
            return ValidationReport(False, "finite", float(r[i]), "non-finite tabulated value")
        outside = (r > spec.r0) & (v != 0.0)
        if outside.any():
            i = int(np.argmax(outside))
            return ValidationReport(
                False, "cutoff", float(r[i]),
                f"V({r[i]:g}) = {v[i]:g} is non-zero beyond r0 = {spec.r0:g}",
            )
        return _check_origin(r, v)
    if isinstance(shape, PiecewiseConstant):
        # bounded by construction; a breakpoint past r0 is harmless since V = 0 there
        return ValidationReport(True)
    return ValidationReport(True)


def _check_origin(r, v):
    pos = r > 0
    r, v = r[pos], v[pos]
    g = r * np.abs(v)
    # innermost decade of samples, at most five points
    inner = r <= 10.0 * r[0]
    rr, gg = r[inner][:5], g[inner][:5]
    if gg[0] == 0.0 or len(rr) < 2:
        return ValidationReport(True, details={"r_times_v": float(gg[0])})
    if np.any(gg == 0.0):
        return ValidationReport(True, details={"r_times_v": float(gg[0])})
    power = np.polyfit(np.log(rr), np.log(gg), 1)[0]
    if power < _ORIGIN_MIN_POWER:
        return ValidationReport(
            False, "origin", float(rr[0]),
            f"r|V(r)| does not vanish toward the origin (fitted power {power:.3f})",
            {"power": float(power)},
        )
    return ValidationReport(True, details={"power": float(power)})
