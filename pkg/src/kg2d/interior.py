"""Interior radial solution on ``[0, r0]`` and its log-derivative.

The radial equation

    R'' + [(E - lam V)^2 - M^2 - (m^2 - 1/4) / r^2] R = 0

has a regular singular point at the origin with Frobenius exponents
``m + 1/2`` (regular) and ``-m + 1/2``.  We integrate the factored function
``u = R / r^(m+1/2)``, which obeys

    u'' + (2m + 1)/r u' + [(E - lam V)^2 - M^2] u = 0,

in the dimensionless radius ``x = r / r0``, starting at ``x = 1e-6`` from the
series seed ``R = r^(m+1/2)``, ``R' = (m + 1/2) r^(m-1/2)`` (``u = 1, u' = 0``).
Two quadratures ride along with the solution when requested:

    norm   = int_0^r0 R^2 dr
    weight = int_0^r0 R^2 2 (E - lam V) dr

The second one is the interior part of the energy slope of ``A_m``.

Everything here is a pure function of its inputs.  Batched calls take arrays
of energies and couplings and return arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._rk import dopri45
from .errors import DomainError, UndefinedSlopeError
from .potential import Coupling, PotentialSpec

X_START = 1e-6
DEFAULT_RTOL = 1e-10
POLE_THRESHOLD = 1e-12
# |u| and |u'| far below this are noise relative to the unit seed
_ATOL_FACTOR = 1e-3


class Shot(NamedTuple):
    """Raw end-point data of a batched interior integration (arrays)."""

    R: np.ndarray       # R(r0)
    dR: np.ndarray      # R'(r0)
    norm: np.ndarray | None
    weight: np.ndarray | None

    @property
    def log_derivative(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.dR / self.R


def _segments(spec):
    edges = [X_START] + [b / spec.r0 for b in spec.breakpoints() if b / spec.r0 > X_START] + [1.0]
    return list(zip(edges[:-1], edges[1:]))


def _make_rhs(spec, m, E, lam, a, b, quad):
    """Right-hand side on the segment ``[a, b]`` in units of ``r0``."""
    r0 = spec.r0
    M2 = spec.mass ** 2
    two_s = 2.0 * m + 1.0
    # keep potential lookups strictly inside the segment so step-function
    # shapes see the region value even at the segment ends
    lo = a + 1e-12 * (b - a)
    hi = b - 1e-12 * (b - a)
    constant = spec.shape.kind == "square_well"
    if constant:
        v_const = float(spec.unscaled(0.5 * (a + b) * r0))

    def rhs(x, y):
        if constant:
            kin = E - lam * v_const
        else:
            kin = E - lam * spec.unscaled(np.clip(x, lo, hi) * r0)
        q = (kin * kin - M2) * (r0 * r0)
        u, w = y[0], y[1]
        out = np.empty_like(y)
        out[0] = w
        out[1] = -(two_s / x) * w - q * u
        if quad:
            dens = x ** two_s * u * u
            out[2] = dens
            out[3] = dens * (2.0 * kin)
        return out

    return rhs


def shoot(spec, m, E, lam, *, rtol=DEFAULT_RTOL, quad=False, amplitude=1.0):
    """Integrate a batch of interior problems; return end-point data.

    ``E`` and ``lam`` broadcast against each other.  Used by every module
    that needs ``A_m(E, lam)`` for many points at once.
    """
    E, lam = np.broadcast_arrays(np.asarray(E, dtype=float), np.asarray(lam, dtype=float))
    shape = E.shape
    E = E.ravel().copy()
    lam = lam.ravel().copy()
    if not np.all(np.isfinite(E)):
        raise DomainError("energy must be finite")
    n = E.size
    s = m + 0.5
    ncomp = 4 if quad else 2
    y = np.zeros((ncomp, n))
    y[0] = amplitude
    atol = np.full(ncomp, rtol * _ATOL_FACTOR * amplitude)
    if quad:
        atol[2:] *= amplitude
    for a, b in _segments(spec):
        rhs = _make_rhs(spec, m, E, lam, a, b, quad)
        h0 = 0.1 * a if a == X_START else 1e-3 * (b - a)
        y, _ = dopri45(rhs, a, b, y, rtol=rtol, atol=atol, h0=h0, scale=spec.r0)
    r0 = spec.r0
    pref = r0 ** s
    R = pref * y[0]
    dR = pref * (y[1] + s * y[0]) / r0
    norm = weight = None
    if quad:
        pq = r0 ** (2 * s + 1)
        norm = (pq * y[2]).reshape(shape)
        weight = (pq * y[3]).reshape(shape)
    return Shot(R.reshape(shape), dR.reshape(shape), norm, weight)


def interior_log_derivative(spec, lam, m, E, *, rtol=DEFAULT_RTOL):
    """``A_m(E, lam)`` for scalar or array ``E`` (``inf``/``nan`` at poles)."""
    out = shoot(spec, m, E, lam, rtol=rtol).log_derivative
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class InteriorSolution:
    """Regular radial solution on ``(0, r0]`` at fixed ``(E, m, lam)``.

    ``log_derivative`` is ``None`` when ``pole`` is set, i.e. when ``R(r0)`` vanishes to
    within ``POLE_THRESHOLD`` of the largest sample.
    """

    m: int
    E: float
    lam: float
    grid: np.ndarray
    R: np.ndarray
    dR: np.ndarray
    R_at_r0: float
    dR_at_r0: float
    log_derivative: float | None
    pole: bool
    norm: float
    weight: float


def integrate_interior(spec: PotentialSpec, lam, m: int, E: float, *, rtol=DEFAULT_RTOL,
                       amplitude=1.0, max_step=None) -> InteriorSolution:
    """Integrate the radial equation on ``[0, r0]`` and record the solution.

    Parameters
    ----------
    spec : PotentialSpec
    lam : float or Coupling
    m : int
        Partial wave, ``m >= 0``.
    E : float
        Real energy of either sign.
    rtol : float
        Relative tolerance of the embedded 5(4) pair.
    amplitude : float
        Seed amplitude; ``A`` does not depend on it.
    max_step : float, optional
        Largest step in units of ``r0`` (controls the sample density).
    """
    lam = lam.lam if isinstance(lam, Coupling) else Coupling(float(lam)).lam
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise DomainError(f"partial wave must be a non-negative integer, got {m!r}")
    E = float(E)
    if not np.isfinite(E):
        raise DomainError("energy must be finite")
    s = m + 0.5
    Ea, la = np.array([E]), np.array([lam])
    y = np.zeros((4, 1))
    y[0] = amplitude
    atol = np.full(4, rtol * _ATOL_FACTOR * amplitude)
    atol[2:] *= amplitude
    xs_all, ys_all = [], []
    for a, b in _segments(spec):
        rhs = _make_rhs(spec, m, Ea, la, a, b, True)
        h0 = 0.1 * a if a == X_START else 1e-3 * (b - a)
        y, (xs, ys) = dopri45(rhs, a, b, y, rtol=rtol, atol=atol, h0=h0,
                              max_step=max_step, record=True, scale=spec.r0)
        if xs_all:
            xs, ys = xs[1:], ys[1:]
        xs_all.extend(xs)
        ys_all.extend(ys)
    x = np.asarray(xs_all)
    Y = np.asarray(ys_all).T
    r0 = spec.r0
    r = x * r0
    R = r ** s * Y[0]
    dR = r ** s * (Y[1] / r0 + s * Y[0] / r)
    R_end, dR_end = float(R[-1]), float(dR[-1])
    pole = abs(R_end) < POLE_THRESHOLD * float(np.max(np.abs(R)))
    pq = r0 ** (2 * s + 1)
    return InteriorSolution(
        m=int(m), E=E, lam=lam, grid=r, R=R, dR=dR,
        R_at_r0=R_end, dR_at_r0=dR_end,
        log_derivative=None if pole else dR_end / R_end, pole=bool(pole),
        norm=float(pq * Y[2, -1]), weight=float(pq * Y[3, -1]),
    )


def interior_energy_slope(sol: InteriorSolution, spec=None, lam=None) -> float:
    """``dA_m/dE = -R(r0)^-2 int_0^r0 R^2 2 (E - lam V) dr``.

    ``spec`` and ``lam`` are accepted for symmetry with the other checks; the
    weighted integral is already carried by ``sol``.
    """
    if sol.pole:
        raise UndefinedSlopeError(
            f"R(r0) vanishes at E = {sol.E!r}: the interior log-derivative has a pole"
        )
    return -sol.weight / sol.R_at_r0 ** 2


def pair_overlap(spec, lam, m, E_a, E_b, *, rtol=DEFAULT_RTOL):
    """Integrate two regular solutions together and return their overlaps.

    Returns ``(R_a(r0), R_b(r0), int R_a R_b dr, int R_a R_b (E_a + E_b - 2 lam V) dr)``
    over ``[0, r0]`` for the unit-seeded solutions at energies ``E_a`` and ``E_b``.
    """
    r0 = spec.r0
    s = m + 0.5
    two_s = 2.0 * s
    M2 = spec.mass ** 2
    y = np.zeros((6, 1))
    y[0] = y[2] = 1.0
    atol = np.full(6, rtol * _ATOL_FACTOR)
    for a, b in _segments(spec):
        lo = a + 1e-12 * (b - a)
        hi = b - 1e-12 * (b - a)

        def rhs(x, z, lo=lo, hi=hi):
            v = lam * spec.unscaled(np.clip(x, lo, hi) * r0)
            qa = ((E_a - v) ** 2 - M2) * r0 * r0
            qb = ((E_b - v) ** 2 - M2) * r0 * r0
            out = np.empty_like(z)
            out[0] = z[1]
            out[1] = -(two_s / x) * z[1] - qa * z[0]
            out[2] = z[3]
            out[3] = -(two_s / x) * z[3] - qb * z[2]
            dens = x ** two_s * z[0] * z[2]
            out[4] = dens
            out[5] = dens * (E_a + E_b - 2.0 * v)
            return out

        h0 = 0.1 * a if a == X_START else 1e-3 * (b - a)
        y, _ = dopri45(rhs, a, b, y, rtol=rtol, atol=atol, h0=h0, scale=r0)
    pref = r0 ** s
    pq = r0 ** (2 * s + 1)
    return float(pref * y[0, 0]), float(pref * y[2, 0]), float(pq * y[4, 0]), float(pq * y[5, 0])
