"""Closed-form quantities for ``r > r0`` where the potential vanishes.

Below threshold (``|E| <= M``, ``kappa = sqrt(M^2 - E^2)``) the decaying
exterior solution is ``sqrt(r) K_m(kappa r)`` and the free interior solution is
``sqrt(r) I_m(kappa r)``, so

    B_m(E)   = 1/(2 r0) + kappa K'_m(kappa r0) / K_m(kappa r0)
    A_m(E,0) = 1/(2 r0) + kappa I'_m(kappa r0) / I_m(kappa r0)

with threshold limits ``(1/2 - m)/r0`` and ``(1/2 + m)/r0``.  Above threshold
the exterior solution is ``sqrt(pi k r / 2) [cos(eta) J_m(kr) - sin(eta) N_m(kr)]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError


class ThresholdSide(enum.IntEnum):
    """Continuum edge ``E = +M`` (particles) or ``E = -M`` (antiparticles)."""

    PLUS = 1
    MINUS = -1

    @property
    def sign(self):
        return int(self)

    @property
    def label(self):
        return "+M" if self is ThresholdSide.PLUS else "-M"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if value in (1, "+", "+M", "plus", "PLUS"):
            return cls.PLUS
        if value in (-1, "-", "-M", "minus", "MINUS"):
            return cls.MINUS
        raise DomainError(f"unknown threshold side {value!r}")


def threshold_rho(m, r0):
    """``rho_m = (1/2 - m) / r0``, the exterior log-derivative at threshold."""
    return (0.5 - m) / r0


def kappa_of(E, M):
    """``sqrt(M^2 - E^2)`` written to keep precision near ``|E| = M``."""
    E = np.asarray(E, dtype=float)
    return np.sqrt(np.maximum((M - E) * (M + E), 0.0))


def _check_bound(E, M, *, strict):
    E = np.asarray(E, dtype=float)
    if not np.all(np.isfinite(E)):
        raise DomainError("energy must be finite")
    bad = np.abs(E) >= M if strict else np.abs(E) > M
    if np.any(bad):
        raise DomainError(f"energy outside the bound region |E| {'<' if strict else '<='} M")
    return E


def b_of_kappa(m, kappa, r0):
    """``B_m`` as a function of ``kappa >= 0`` (array or scalar)."""
    kappa = np.asarray(kappa, dtype=float)
    out = (0.5 + specfun.k_log_derivative(m, kappa * r0)) / r0
    return float(out) if np.ndim(out) == 0 else out


def exterior_log_derivative(m, E, r0, M=1.0):
    """Log-derivative ``B_m(E)`` of the decaying exterior solution at ``r0+``.

    Depends on ``E`` only through ``kappa``, so ``B_m(E) = B_m(-E)``.
    """
    E = _check_bound(E, M, strict=False)
    return b_of_kappa(m, kappa_of(E, M), r0)


def free_interior_log_derivative(m, E, r0, M=1.0):
    """Log-derivative ``A_m(E, 0)`` of the free regular solution at ``r0-``.

    ``|E| = M`` returns the ``kappa -> 0`` limit ``(m + 1/2) / r0``.
    """
    E = _check_bound(E, M, strict=False)
    out = (0.5 + specfun.i_log_derivative(m, kappa_of(E, M) * r0)) / r0
    return float(out) if np.ndim(out) == 0 else out


def exterior_norm(m, kappa, r0):
    """``int_{r0}^inf R_out^2 dr`` for the exterior solution with ``R_out(r0) = 1``.

    Closed form ``(r0/2) [K_{m-1} K_{m+1} / K_m^2 - 1]`` at ``kappa r0``;
    infinite at ``kappa = 0`` for ``m <= 1`` and ``r0 / (2m - 2)`` otherwise.
    """
    kappa = np.asarray(kappa, dtype=float)
    out = np.empty_like(kappa)
    zero = kappa == 0.0
    if np.any(~zero):
        out[~zero] = 0.5 * r0 * (specfun.k_ratio_squared(m, kappa[~zero] * r0) - 1.0)
    if np.any(zero):
        out[zero] = math.inf if m <= 1 else r0 / (2.0 * m - 2.0)
    return float(out) if out.ndim == 0 else out


def exterior_energy_slope(m, E, r0, M=1.0):
    """``dB_m/dE = 2 E int_{r0}^inf R_out^2 dr`` with ``R_out(r0) = 1``.

    At threshold this is ``+-inf`` for ``m <= 1`` and ``E r0 / (m - 1)`` otherwise.
    """
    E = _check_bound(E, M, strict=False)
    with np.errstate(invalid="ignore"):
        out = 2.0 * E * exterior_norm(m, kappa_of(E, M), r0)
    return float(out) if np.ndim(out) == 0 else out


def exterior_overlap(m, kappa_a, kappa_b, B_a, B_b):
    """``int_{r0}^inf R_a R_b dr`` for two exterior solutions normalized at ``r0``.

    Uses the Wronskian reduction ``(B_b - B_a) / (kappa_a^2 - kappa_b^2)``;
    requires ``kappa_a != kappa_b``.
    """
    return (B_b - B_a) / (kappa_a * kappa_a - kappa_b * kappa_b)


def scattering_exterior(m, k, eta, r):
    """Exterior scattering solution ``sqrt(pi k r/2) [cos(eta) J_m - sin(eta) N_m]``."""
    r = np.asarray(r, dtype=float)
    x = k * r
    j = specfun.bessel_j(m, x).value
    n = specfun.bessel_n(m, x).value
    return np.sqrt(0.5 * math.pi * x) * (math.cos(eta) * j - math.sin(eta) * n)


@dataclass(frozen=True)
class IntersectionReport:
    m: int
    min_gap: float
    argmin_E: float
    threshold_gap: float
    open_interval: bool
    passed: bool


def no_free_intersection_check(m, r0, M=1.0, n=1000):
    """Check ``A_m(E, 0) > B_m(E)`` on a grid of ``n`` energies in ``(-M, M)``.

    For ``m = 0`` the two curves meet at ``E = +-M``; the grid then excludes
    the end points and the (zero) threshold gap is only recorded.
    """
    if m < 0:
        raise DomainError("partial wave must be non-negative")
    # open interval for every m; the end points are reported via threshold_gap
    E = np.linspace(-M, M, n + 2)[1:-1]
    gap = free_interior_log_derivative(m, E, r0, M) - exterior_log_derivative(m, E, r0, M)
    i = int(np.argmin(gap))
    threshold_gap = 2.0 * m / r0
    return IntersectionReport(
        m=m, min_gap=float(gap[i]), argmin_E=float(E[i]), threshold_gap=threshold_gap,
        open_interval=(m == 0), passed=bool(np.all(gap > 0)),
    )
