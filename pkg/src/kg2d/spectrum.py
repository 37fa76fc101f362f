"""Bound states in ``|E| <= M``: location, norm factor and classification.

Roots are located on the pole-free mismatch

    W(E) = R'(r0) - B_m(E) R(r0)

(the Wronskian of the interior solution with the exterior one normalized to
``R_out(r0) = 1``) rather than on ``A_m - B_m``, which has a pole wherever
``R(r0)`` vanishes.

The energy scan covers ``[-M + edge, M - edge]`` on a uniform grid.  Weakly
bound states closer to a threshold than ``edge`` are picked up by two extra
bands parametrized by ``log(kappa)``; in two dimensions an s-wave can bind
with ``kappa`` exponentially small in the inverse well strength, far below any
fixed energy window.

Each state carries the weighted norm ``epsilon = int R^2 2 (E - lam V) dr``
(with ``int R^2 dr = 1``) whose sign separates particles from antiparticles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import exterior, specfun
from .errors import DomainError, InconsistentStateError, ResolutionError, UndefinedSlopeError
from .interior import DEFAULT_RTOL, POLE_THRESHOLD, integrate_interior, pair_overlap, shoot
from .potential import Coupling

N_PANELS = 2000
EDGE = 1e-6
EPS_TOL = 1e-8
E_TOL = 1e-11
BAND_POINTS = 200
# smallest kappa r0 probed near each threshold
KAPPA_FLOOR_S = 1e-150
KAPPA_FLOOR = 1e-7
SLOPE_STEP = 1e-6
SLOPE_RTOL = 1e-12
# a local |W| minimum this far below the scan maximum with no sign change
# signals two real roots about to merge (or just merged) into a complex pair
NEAR_DOUBLE_ROOT = 1e-3


class Kind(enum.Enum):
    PARTICLE = "Particle"
    ANTIPARTICLE = "Antiparticle"
    PAIR = "Pair"


def classify(epsilon, mass=1.0, tol=EPS_TOL):
    if epsilon > tol * mass:
        return Kind.PARTICLE
    if epsilon < -tol * mass:
        return Kind.ANTIPARTICLE
    return Kind.PAIR


def _lam(lam):
    return lam.lam if isinstance(lam, Coupling) else Coupling(float(lam)).lam


def energy_of_kappa(kappa, sign, M):
    """``sign * sqrt(M^2 - kappa^2)`` without cancellation for small ``kappa``."""
    kappa = np.asarray(kappa, dtype=float)
    root = np.sqrt(np.maximum(M * M - kappa * kappa, 0.0))
    return sign * (M - kappa * kappa / (M + root))


def mismatch(spec, lam, m, E, *, rtol=DEFAULT_RTOL):
    """``W(E) = R'(r0) - B_m(E) R(r0)`` for scalar or array ``|E| <= M``."""
    lam = _lam(lam)
    B = exterior.exterior_log_derivative(m, E, spec.r0, spec.mass)
    shot = shoot(spec, m, E, lam, rtol=rtol)
    out = shot.dR - B * shot.R
    return float(out) if np.ndim(out) == 0 else out


def mismatch_kappa(spec, lam, m, kappa, sign, *, rtol=DEFAULT_RTOL):
    """Mismatch on the branch ``E = sign sqrt(M^2 - kappa^2)``, parametrized by ``kappa``.

    Near threshold ``E`` rounds to ``+-M`` long before ``kappa`` vanishes; the
    exterior factor is evaluated at the exact ``kappa``.
    """
    E = energy_of_kappa(kappa, sign, spec.mass)
    B = exterior.b_of_kappa(m, kappa, spec.r0)
    shot = shoot(spec, m, E, _lam(lam), rtol=rtol)
    out = shot.dR - B * shot.R
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundState:
    """A matched solution below threshold.

    ``R_full`` is normalized to ``int_0^inf R^2 dr = 1`` and sampled on ``r``
    (interior integration points followed by exterior points where the
    solution is ``R(r0) sqrt(r/r0) K_m(kappa r) / K_m(kappa r0)``).
    """

    m: int
    E: float
    lam: float
    kappa: float
    r: np.ndarray = field(repr=False)
    R_full: np.ndarray = field(repr=False)
    R_at_r0: float
    epsilon: float
    kind: Kind
    interior_norm: float
    interior_weight: float
    raw_R_at_r0: float
    exterior_norm: float
    residual: float

    @property
    def is_particle(self):
        return self.kind is Kind.PARTICLE

    @property
    def is_antiparticle(self):
        return self.kind is Kind.ANTIPARTICLE


@dataclass(frozen=True)
class SpectrumResult:
    m: int
    lam: float
    states: tuple
    n_plus: int
    n_minus: int
    pair_count: int
    complex_energy_warning: bool

    @property
    def net_count(self):
        return self.n_plus - self.n_minus

    @property
    def energies(self):
        return np.array([s.E for s in self.states])


def _scan_grids(spec, m, n_panels, band_points, edge):
    """Energy grid and ``log(kappa)`` band grid.

    The last band node sits at the energy grid's end point, so the three
    pieces (-M band, energy grid, +M band) cover the bound region without gaps.
    """
    M, r0 = spec.mass, spec.r0
    grid = np.linspace(-M + edge * M, M - edge * M, n_panels + 1)
    kappa_edge = float(exterior.kappa_of(grid[-1], M))
    floor = (KAPPA_FLOOR_S if m == 0 else KAPPA_FLOOR) / r0
    n_band = band_points * (4 if m == 0 else 1)
    t = np.linspace(math.log(floor), math.log(kappa_edge), n_band + 1)
    return t, grid


def _sign_changes(w):
    # an exact zero on a node is attributed to the panel that ends there
    s = np.sign(w)
    return np.nonzero((s[:-1] * s[1:] < 0) | ((s[1:] == 0) & (s[:-1] != 0)))[0]


def _scan(spec, lam, m, n_panels, band_points, edge, rtol):
    t, grid = _scan_grids(spec, m, n_panels, band_points, edge)
    w_grid = mismatch(spec, lam, m, grid, rtol=rtol)
    w_minus = mismatch_kappa(spec, lam, m, np.exp(t), -1, rtol=rtol)
    w_plus = mismatch_kappa(spec, lam, m, np.exp(t), +1, rtol=rtol)
    return t, grid, w_minus, w_grid, w_plus


def _brackets(t, grid, w_minus, w_grid, w_plus):
    out = [(-1, t[i], t[i + 1]) for i in _sign_changes(w_minus)]
    out += [("E", grid[i], grid[i + 1]) for i in _sign_changes(w_grid)]
    out += [(+1, t[i], t[i + 1]) for i in _sign_changes(w_plus)]
    return out


def _near_double_root(w):
    a = np.abs(w)
    if a.size < 3:
        return False
    top = float(np.max(a))
    if top == 0.0:
        return False
    inner = (a[1:-1] < a[:-2]) & (a[1:-1] < a[2:])
    same = (np.sign(w[:-2]) == np.sign(w[1:-1])) & (np.sign(w[1:-1]) == np.sign(w[2:]))
    deep = a[1:-1] < NEAR_DOUBLE_ROOT * top
    return bool(np.any(inner & same & deep))


def _refine(spec, lam, m, bracket, rtol):
    """Return ``(E, kappa)`` of the root inside one bracket."""
    M = spec.mass
    label, lo, hi = bracket
    if label == "E":
        f = lambda E: mismatch(spec, lam, m, E, rtol=rtol)
        E = brentq(f, lo, hi, xtol=E_TOL * M, rtol=4 * np.finfo(float).eps, maxiter=200)
        return float(E), float(exterior.kappa_of(E, M))
    sign = label
    f = lambda t: mismatch_kappa(spec, lam, m, math.exp(t), sign, rtol=rtol)
    # |dE/dlog(kappa)| = kappa^2 / |E|; ask for at least E_TOL in energy
    k_hi = math.exp(hi)
    xtol = min(1e-10, E_TOL * M * M / (k_hi * k_hi))
    t = brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    kappa = math.exp(t)
    return float(energy_of_kappa(kappa, sign, M)), kappa


def make_bound_state(spec, lam, m, E, kappa=None, *, rtol=DEFAULT_RTOL, eps_tol=EPS_TOL,
                     n_exterior=200):
    """Package a matched solution at ``E`` (with ``kappa`` if known exactly)."""
    lam = _lam(lam)
    M, r0 = spec.mass, spec.r0
    if kappa is None:
        kappa = float(exterior.kappa_of(E, M))
    sol = integrate_interior(spec, lam, m, E, rtol=rtol)
    R0 = sol.R_at_r0
    X = exterior.exterior_norm(m, kappa, r0)
    if not math.isfinite(X):
        raise InconsistentStateError(
            f"m={m} solution at E={E!r} has kappa=0 and no square-integrable tail"
        )
    total = sol.norm + R0 * R0 * X
    scale = 1.0 / math.sqrt(total)
    eps = (sol.weight + 2.0 * E * R0 * R0 * X) / total
    B = exterior.b_of_kappa(m, kappa, r0)
    residual = abs(sol.dR_at_r0 - B * R0) / max(abs(sol.dR_at_r0), abs(B * R0), 1e-300)
    if kappa > 0:
        span = min(40.0 / kappa, 1e3 * r0)
    else:
        span = 1e3 * r0
    r_out = r0 + span * np.linspace(0.0, 1.0, n_exterior + 1)[1:] ** 2
    k0 = specfun.bessel_k_scaled(m, kappa * r0).value
    kr = specfun.bessel_k_scaled(m, kappa * r_out).value
    R_out = R0 * np.sqrt(r_out / r0) * np.exp(-kappa * (r_out - r0)) * kr / k0
    r = np.concatenate([sol.grid, r_out])
    R_full = scale * np.concatenate([sol.R, R_out])
    return BoundState(
        m=m, E=float(E), lam=lam, kappa=float(kappa), r=r, R_full=R_full,
        R_at_r0=scale * R0, epsilon=float(eps), kind=classify(eps, M, eps_tol),
        interior_norm=sol.norm, interior_weight=sol.weight, raw_R_at_r0=R0,
        exterior_norm=float(X), residual=float(residual),
    )


def find_bound_states(spec, lam, m, *, n_panels=N_PANELS, band_points=BAND_POINTS,
                      edge=EDGE, rtol=DEFAULT_RTOL, eps_tol=EPS_TOL, check_resolution=True):
    """Locate every real bound state of partial wave ``m`` at coupling ``lam``.

    Parameters
    ----------
    spec : PotentialSpec
    lam : float or Coupling
    m : int
    n_panels : int
        Panels of the uniform energy scan.
    band_points : int
        Panels of each ``log(kappa)`` band next to the thresholds (four times
        as many for ``m = 0``).
    edge : float
        Width, in units of ``M``, of the energy windows left to the bands.
    check_resolution : bool
        Repeat the scan at twice the resolution and require the same bracket
        count.

    Returns
    -------
    SpectrumResult

    Raises
    ------
    ResolutionError
        When the doubled scan finds a different number of sign changes.
    """
    lam = _lam(lam)
    factor = 2 if check_resolution else 1
    t, grid, w_minus, w_grid, w_plus = _scan(
        spec, lam, m, factor * n_panels, factor * band_points, edge, rtol)
    brackets = _brackets(t, grid, w_minus, w_grid, w_plus)
    if check_resolution:
        coarse = _brackets(t[::2], grid[::2], w_minus[::2], w_grid[::2], w_plus[::2])
        if len(coarse) != len(brackets):
            raise ResolutionError(
                f"m={m}, lam={lam}: {len(coarse)} roots at {n_panels} panels but "
                f"{len(brackets)} at {2 * n_panels}; rerun with a finer scan"
            )
    states = []
    for b in brackets:
        E, kappa = _refine(spec, lam, m, b, rtol)
        states.append(make_bound_state(spec, lam, m, E, kappa, rtol=rtol, eps_tol=eps_tol))
    states.sort(key=lambda s: s.E)
    n_p = sum(s.kind is Kind.PARTICLE for s in states)
    n_a = sum(s.kind is Kind.ANTIPARTICLE for s in states)
    pairs = sum(s.kind is Kind.PAIR for s in states)
    return SpectrumResult(
        m=m, lam=lam, states=tuple(states), n_plus=n_p + pairs, n_minus=n_a + pairs,
        pair_count=pairs, complex_energy_warning=_near_double_root(w_grid),
    )


def epsilon_norm(state, spec=None, lam=None):
    """Weighted norm ``int R^2 2 (E - lam V) dr`` of a unit-normalized state.

    The interior part comes from the quadrature carried along the interior
    integration, the exterior part from the closed form ``2 E R(r0)^2 X``.
    """
    if not math.isfinite(state.exterior_norm):
        raise InconsistentStateError("state has no decaying exterior tail")
    R0 = state.raw_R_at_r0
    X = state.exterior_norm
    return (state.interior_weight + 2.0 * state.E * R0 * R0 * X) / (state.interior_norm + R0 * R0 * X)


@dataclass(frozen=True)
class SlopeReport:
    E: float
    lhs: float          # B' - A' by finite differences
    rhs: float          # epsilon / R(r0)^2
    residual: float
    passed: bool
    skipped: bool = False
    notice: str = ""


def slope_identity_check(state, spec, lam, *, rtol=1e-4, step=SLOPE_STEP):
    """Check ``B'_m(E) - A'_m(E) = epsilon / R(r0)^2`` at a bound state.

    Derivatives are central differences with step ``step * M`` (shrunk near
    threshold so both stencil points stay below it); ``R`` is the same unit
    normalization used for ``epsilon``.
    """
    lam = _lam(lam)
    M, r0 = spec.mass, spec.r0
    m, E = state.m, state.E
    if abs(state.raw_R_at_r0) < POLE_THRESHOLD:
        return SlopeReport(E, math.nan, math.nan, math.nan, False, True,
                           "R(r0) vanishes; slope identity undefined")
    gap = M - abs(E)
    h = min(step * M, 0.01 * gap)
    if h <= 0.0:
        raise UndefinedSlopeError("bound state sits on the threshold")
    Es = np.array([E - h, E + h])
    A = shoot(spec, m, Es, lam, rtol=SLOPE_RTOL).log_derivative
    B = exterior.exterior_log_derivative(m, Es, r0, M)
    dA = (A[1] - A[0]) / (2 * h)
    dB = (B[1] - B[0]) / (2 * h)
    lhs = float(dB - dA)
    rhs = state.epsilon / state.R_at_r0 ** 2
    res = abs(lhs - rhs) / abs(rhs) if rhs != 0 else abs(lhs)
    return SlopeReport(E, lhs, float(rhs), float(res), bool(res <= rtol))


def orthogonality_check(state_a, state_b, spec, lam, *, rtol=DEFAULT_RTOL):
    """Weighted overlap ``int R_a (E_a + E_b - 2 lam V) R_b dr`` of unit-normalized states."""
    lam = _lam(lam)
    if state_a.m != state_b.m:
        raise DomainError("states of different partial waves are orthogonal by symmetry")
    if state_a.E == state_b.E:
        return epsilon_norm(state_a)
    m, r0 = state_a.m, spec.r0
    Ra, Rb, overlap, weighted = pair_overlap(spec, lam, m, state_a.E, state_b.E, rtol=rtol)
    ka, kb = state_a.kappa, state_b.kappa
    if abs(ka - kb) <= 1e-12 * max(ka, kb):
        ext = exterior.exterior_norm(m, ka, r0)
    else:
        Ba = exterior.b_of_kappa(m, ka, r0)
        Bb = exterior.b_of_kappa(m, kb, r0)
        ext = exterior.exterior_overlap(m, ka, kb, Ba, Bb)
    weighted_total = weighted + (state_a.E + state_b.E) * Ra * Rb * ext
    na = state_a.interior_norm + state_a.raw_R_at_r0 ** 2 * state_a.exterior_norm
    nb = state_b.interior_norm + state_b.raw_R_at_r0 ** 2 * state_b.exterior_norm
    return float(weighted_total / math.sqrt(na * nb))
