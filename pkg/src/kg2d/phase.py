"""Scattering phase shifts, their threshold limits and threshold crossings.

Above threshold (``|E| > M``, ``k = sqrt(E^2 - M^2)``) the exterior solution is
``c [cos(eta) u_J - sin(eta) u_N]`` with ``u_J = sqrt(r) J_m(kr)`` and
``u_N = sqrt(r) N_m(kr)``.  Since ``W[u_J, u_N] = 2/pi``, the two Wronskians of
the interior solution ``R`` at ``r0``

    Y = R u_J' - R' u_J = (2c/pi) sin(eta)
    X = R u_N' - R' u_N = (2c/pi) cos(eta)

fix ``eta`` through ``atan2(Y, X)``.  ``(Y, X)`` never vanishes and the seed
keeps ``c > 0`` along any continuous path, so following the angle of this
vector in ``lam`` from the free problem (where ``Y = 0, X > 0``) yields the
phase on the branch that starts at zero.

Threshold limits come from continuation at a few small momenta followed by
extrapolation in ``k``: a power law ``k^(2m)`` (``k^2`` for ``m = 1``) or, for
``m = 0``, the rational dependence ``tan(eta) = a t / (1 + b t)`` on
``t = 1 / (log(k r0 / 2) + gamma)``.

Crossings of the threshold log-derivative ``A_m(+-M, lam)`` through
``B_m(+-M) = rho_m`` are counted on the angle ``phi = atan2(r0 R', R)``, which
moves continuously through the poles of ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import ContinuationError, DomainError, RefinementError, ThresholdAccuracyError
from .exterior import ThresholdSide, threshold_rho
from .interior import DEFAULT_RTOL, shoot
from .potential import Coupling

K_PROBES = (1e-2, 1e-3, 1e-4)
N_LAMBDA = 65
LAMBDA_FLOOR = 1e-8
ACCURACY = 1e-3 * math.pi
HALF_PI = 0.5 * math.pi


def _wrap(d):
    """Map an angle difference into ``(-pi, pi]``."""
    return d - 2.0 * math.pi * np.ceil((d - math.pi) / (2.0 * math.pi))


def _energy(k, side, M):
    return ThresholdSide.parse(side).sign * math.sqrt(M * M + k * k)


def _wronskians(spec, m, k, E, lam, rtol):
    shot = shoot(spec, m, E, lam, rtol=rtol)
    r0 = spec.r0
    x = k * r0
    jv, jd = specfun.bessel_j(m, x)
    nv, nd = specfun.bessel_n(m, x)
    sr = math.sqrt(r0)
    uj, ujp = sr * jv, jv / (2 * sr) + sr * k * jd
    un, unp = sr * nv, nv / (2 * sr) + sr * k * nd
    Y = shot.R * ujp - shot.dR * uj
    X = shot.R * unp - shot.dR * un
    return Y, X


def tan_phase(spec, lam, m, E, *, rtol=DEFAULT_RTOL):
    """``tan(eta_m)`` at ``|E| > M``; ``inf`` marks ``eta = pi/2 (mod pi)``."""
    lam = lam.lam if isinstance(lam, Coupling) else Coupling(float(lam)).lam
    M = spec.mass
    if not math.isfinite(E) or abs(E) <= M:
        raise DomainError("phase shifts need |E| > M")
    k = math.sqrt((E - M) * (E + M))
    Y, X = _wronskians(spec, m, k, E, lam, rtol)
    Y, X = float(Y), float(X)
    if X == 0.0:
        return math.inf
    return Y / X


def scattering_epsilon(E, M=1.0):
    """``pi sqrt(E^2 - M^2) sign(E)``, the norm factor of a continuum state."""
    if not math.isfinite(E) or abs(E) <= M:
        raise DomainError("continuum states need |E| > M")
    return math.copysign(math.pi * math.sqrt((E - M) * (E + M)), E)


@dataclass(frozen=True)
class PhaseRecord:
    m: int
    k: float
    lam: float
    side: ThresholdSide
    eta: float
    branch_offset: int
    path_lam: np.ndarray = field(repr=False)
    path_eta: np.ndarray = field(repr=False)


def _follow(vec, lam_path, floor, start_angle=None):
    """Track the angle of a vector field ``vec(lams) -> (Y, X)`` along ``lam_path``.

    Steps are bisected until the wrapped angle change is below ``pi/2``.  At
    the refinement floor a step is still accepted when exactly one component
    changes sign, which pins the rotation to less than half a turn.
    """
    lams = np.asarray(lam_path, dtype=float)
    Y, X = vec(lams)
    theta = np.arctan2(Y, X)
    out_l, out_t = [float(lams[0])], []
    cur = float(theta[0]) if start_angle is None else float(
        theta[0] + 2 * math.pi * round((start_angle - theta[0]) / (2 * math.pi)))
    out_t.append(cur)
    for i in range(len(lams) - 1):
        stack = [(lams[i + 1], Y[i + 1], X[i + 1])]
        a, ya, xa = lams[i], Y[i], X[i]
        while stack:
            b, yb, xb = stack[-1]
            d = float(_wrap(math.atan2(yb, xb) - math.atan2(ya, xa)))
            if abs(d) >= HALF_PI:
                if abs(b - a) > floor:
                    mid = 0.5 * (a + b)
                    ym, xm = vec(np.array([mid]))
                    stack.append((mid, float(ym[0]), float(xm[0])))
                    continue
                flips = (np.sign(ya) != np.sign(yb)) + (np.sign(xa) != np.sign(xb))
                if flips != 1:
                    raise ContinuationError(
                        f"phase step unresolved at lam = {a:.10g} (step {abs(b - a):.1e}); "
                        "suspected near-tangency"
                    )
            stack.pop()
            cur += d
            out_l.append(float(b))
            out_t.append(cur)
            a, ya, xa = b, yb, xb
    return np.array(out_l), np.array(out_t)


def _default_path(n=N_LAMBDA):
    return np.linspace(0.0, 1.0, n)


def unwrap_phase(spec, m, k_probe, side, lam_path=None, *, eta_start=0.0, rtol=DEFAULT_RTOL,
                 floor=LAMBDA_FLOOR):
    """Continue ``eta_m(k_probe, lam)`` along ``lam_path`` and return the end point.

    Parameters
    ----------
    spec : PotentialSpec
    m : int
    k_probe : float
        Momentum in ``(0, 0.01 / r0]``.
    side : ThresholdSide or +-1
        Continuum ``E > M`` or ``E < -M``.
    lam_path : array_like, optional
        Monotone coupling path; defaults to a uniform grid from 0 to 1.
    eta_start : float
        Phase at the first path point (zero for the free problem).

    Returns
    -------
    PhaseRecord
        Phase at the last path point, with the accepted path.
    """
    side = ThresholdSide.parse(side)
    if not (0.0 < k_probe <= 0.01 / spec.r0 * (1 + 1e-12)):
        raise DomainError(f"k_probe must lie in (0, 0.01/r0], got {k_probe}")
    path = _default_path() if lam_path is None else np.asarray(lam_path, dtype=float)
    for v in (path[0], path[-1]):
        Coupling(float(v))
    E = _energy(k_probe, side, spec.mass)

    def vec(lams):
        return _wronskians(spec, m, k_probe, np.full(lams.shape, E), lams, rtol)

    lams, etas = _follow(vec, path, floor, start_angle=eta_start)
    eta = float(etas[-1])
    Y, X = vec(np.array([lams[-1]]))
    principal = math.atan(float(Y[0] / X[0])) if X[0] != 0 else HALF_PI
    return PhaseRecord(m=m, k=float(k_probe), lam=float(lams[-1]), side=side, eta=eta,
                       branch_offset=int(round((eta - principal) / math.pi)),
                       path_lam=lams, path_eta=etas)


@dataclass(frozen=True)
class ThresholdPhase:
    m: int
    side: ThresholdSide
    delta: float
    crossing_count: int
    extrapolation_residual: float
    k_probes: tuple = ()
    etas: tuple = ()

    @property
    def delta_over_pi(self):
        return self.delta / math.pi


def _power_extrapolate(ks, etas, p):
    """Richardson steps on ``eta(k) = delta + c k^p + c' k^(p+2)``."""
    (k1, k2, k3), (e1, e2, e3) = ks, etas
    r12 = (k1 / k2) ** p
    r23 = (k2 / k3) ** p
    d12 = (r12 * e2 - e1) / (r12 - 1)
    d23 = (r23 * e3 - e2) / (r23 - 1)
    # second stage removes the next power
    s = (k2 / k3) ** (p + 2)
    d3 = (s * d23 - d12) / (s - 1)
    return d23, abs(d3 - d23)


def log_variable(k, r0):
    """``t = 1 / (log(k r0 / 2) + gamma)``; ``tan(eta_0)`` is rational in ``t`` up to ``O(k^2)``."""
    return 1.0 / (math.log(0.5 * k * r0) + specfun.EULER_GAMMA)


def _rational_delta(ts, etas, tans):
    """Threshold limit of the s-wave phase from ``tan(eta) = a t / (1 + b t)``.

    The model branch ``psi(t)`` is followed from ``t = 0`` (where it vanishes)
    to the smallest probe ``t``; the limit is ``eta(t_min) - psi(t_min)``.
    """
    ts = np.asarray(ts)
    tans = np.asarray(tans)
    design = np.column_stack([ts, -ts * tans])
    a, b = np.linalg.lstsq(design, tans, rcond=None)[0]
    grid = np.linspace(0.0, ts[-1], 4001)
    psi = np.unwrap(np.arctan(a * grid / (1.0 + b * grid)), period=math.pi)
    return etas[-1] - psi[-1], (a, b)


def _rational_extrapolate(ks, etas, r0):
    ts = [log_variable(k, r0) for k in ks]
    tans = [math.tan(e) for e in etas]
    d_all, _ = _rational_delta(ts, etas, tans)
    d_two, _ = _rational_delta(ts[1:], etas[1:], tans[1:])
    return d_all, abs(d_all - d_two)


def threshold_phase(spec, m, side, *, k_probes=K_PROBES, rtol=DEFAULT_RTOL, accuracy=ACCURACY,
                    crossing=None):
    """Threshold phase ``delta_m(+-M)`` with an independent crossing count.

    ``k_probes`` are in units of ``1/r0``.  Raises
    :class:`ThresholdAccuracyError` when the extrapolation residual exceeds
    ``accuracy``.
    """
    side = ThresholdSide.parse(side)
    r0 = spec.r0
    ks = tuple(sorted((k / r0 for k in k_probes), reverse=True))
    etas = tuple(unwrap_phase(spec, m, k, side, rtol=rtol).eta for k in ks)
    if spec.is_null:
        delta, resid = 0.0, 0.0
    elif m == 0:
        delta, resid = _rational_extrapolate(ks, etas, r0)
    else:
        delta, resid = _power_extrapolate(ks, etas, 2 * m)
    if crossing is None:
        crossing = count_threshold_crossings(spec, m, side, rtol=rtol)
    if resid > accuracy:
        raise ThresholdAccuracyError(
            f"m={m} side {side.label}: extrapolation residual {resid / math.pi:.3e} pi "
            f"exceeds {accuracy / math.pi:.1e} pi"
        )
    return ThresholdPhase(m=m, side=side, delta=float(delta), crossing_count=int(crossing),
                          extrapolation_residual=float(resid), k_probes=ks, etas=etas)


@dataclass(frozen=True)
class CrossingEvent:
    lam: float
    side: ThresholdSide
    direction: int      # +1 when A decreases through rho, -1 when it increases


@dataclass(frozen=True)
class CrossingResult:
    m: int
    side: ThresholdSide
    count: int
    events: tuple
    touch_at_end: bool
    arrival: int        # -1 if A arrives at lam = 1 from above, +1 from below
    path_lam: np.ndarray = field(repr=False)
    path_level: np.ndarray = field(repr=False)


def _threshold_vec(spec, m, side, rtol):
    E = side.sign * spec.mass
    r0 = spec.r0

    def vec(lams):
        shot = shoot(spec, m, np.full(lams.shape, E), lams, rtol=rtol)
        # angle atan2(r0 R', R) stored as (Y, X) = (r0 R', R)
        return r0 * shot.dR, shot.R

    return vec


def threshold_crossings(spec, m, side, lam_grid=None, *, rtol=DEFAULT_RTOL, floor=LAMBDA_FLOOR,
                        critical_tol=1e-6, locate=True):
    """Signed count and location of threshold crossings along ``lam`` in ``[0, 1]``.

    The level ``p(lam) = (phi - phi0) / pi`` with ``phi0 = atan(r0 rho_m)`` is
    integer exactly where ``A_m(+-M, lam) = rho_m``; decreasing through an
    integer is a crossing counted ``+1``.  At ``lam = 0`` the level is the
    closed-form free value, which is zero for ``m = 0`` and counts as lying
    above its line.  A touch at ``lam = 1`` within ``critical_tol / r0`` is not
    counted; ``arrival`` records the side it is approached from.
    """
    side = ThresholdSide.parse(side)
    r0 = spec.r0
    rho = threshold_rho(m, r0)
    phi0 = math.atan(r0 * rho)
    grid = _default_path() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    start = math.atan(m + 0.5)      # free value A = (m + 1/2) / r0
    if spec.is_null:
        # A never moves; for m = 0 it sits on its line throughout without crossing
        flat = np.full(grid.shape, (start - phi0) / math.pi)
        return CrossingResult(m=m, side=side, count=0, events=(), touch_at_end=False, arrival=0,
                              path_lam=grid, path_level=flat)
    vec = _threshold_vec(spec, m, side, rtol)
    try:
        lams, phis = _follow(vec, grid, floor, start_angle=start)
    except ContinuationError as exc:
        raise RefinementError(str(exc)) from exc
    level = (phis - phi0) / math.pi
    level[0] = (start - phi0) / math.pi
    base = np.floor(level).astype(int)
    base[0] = 0

    touch, arrival = False, 0
    y1, x1 = vec(np.array([lams[-1]]))
    if x1[0] != 0 and abs(y1[0] / (r0 * x1[0]) - rho) <= critical_tol / r0 and len(level) > 1:
        touch = True
        line = int(round(level[-1]))
        arrival = -1 if level[-2] > line else 1
        base[-1] = line if arrival == -1 else line - 1
    count = int(base[0] - base[-1])

    events = []
    if locate:
        for i in range(len(lams) - 1):
            if base[i] == base[i + 1]:
                continue
            direction = 1 if base[i + 1] < base[i] else -1
            target = max(base[i], base[i + 1])
            lam_star = _locate_level(vec, lams[i], lams[i + 1], phis[i], phi0, target)
            events.extend(CrossingEvent(lam=lam_star, side=side, direction=direction)
                          for _ in range(abs(int(base[i] - base[i + 1]))))
    return CrossingResult(m=m, side=side, count=count, events=tuple(events), touch_at_end=touch,
                          arrival=arrival, path_lam=lams, path_level=level)


def _locate_level(vec, a, b, phi_a, phi0, target, tol=1e-13):
    """Bisect for the coupling in ``[a, b]`` where the level equals ``target``."""
    def f(lam):
        y, x = vec(np.array([lam]))
        phi = phi_a + float(_wrap(math.atan2(float(y[0]), float(x[0])) - phi_a))
        return (phi - phi0) / math.pi - target

    fa = f(a)
    if fa == 0.0:
        return float(a)
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return float(0.5 * (a + b))


def count_threshold_crossings(spec, m, side, lam_grid=None, *, rtol=DEFAULT_RTOL,
                              critical_tol=1e-6):
    """Net number of decreasing minus increasing passages of ``A_m(+-M, lam)`` through ``rho_m``."""
    return threshold_crossings(spec, m, side, lam_grid, rtol=rtol, critical_tol=critical_tol,
                               locate=False).count


@dataclass(frozen=True)
class MonotonicityReport:
    m: int
    k: float
    eta: float
    sensitivity: float
    closed_form: float
    relative_difference: float
    passed: bool


def _eta_of_A(A, m, k, r0):
    x = k * r0
    jv, jd = specfun.bessel_j(m, x)
    nv, nd = specfun.bessel_n(m, x)
    a = A - 0.5 / r0
    return math.atan2(jv * a - k * jd, nv * a - k * nd)


def phase_monotonicity_check(spec, lam, m, k, *, side=ThresholdSide.PLUS, dA=1e-6,
                             rtol=DEFAULT_RTOL):
    """Sensitivity ``d eta / d A`` at fixed ``k`` by perturbing ``A`` by ``+-dA``.

    Also returns the closed form ``-2 cos^2(eta) / (pi r0 (N a - k N')^2)``
    with ``a = A - 1/(2 r0)``.  Passes when the sensitivity is not positive.
    """
    lam = lam.lam if isinstance(lam, Coupling) else Coupling(float(lam)).lam
    side = ThresholdSide.parse(side)
    r0 = spec.r0
    E = _energy(k, side, spec.mass)
    A = float(shoot(spec, m, E, lam, rtol=rtol).log_derivative)
    return monotonicity_at(A, m, k, r0, dA=dA)


def monotonicity_at(A, m, k, r0, *, dA=1e-6):
    """Finite-difference and closed-form ``d eta / d A`` for a given log-derivative."""
    lo = _eta_of_A(A - dA, m, k, r0)
    hi = _eta_of_A(A + dA, m, k, r0)
    fd = float(_wrap(hi - lo)) / (2 * dA)
    eta = _eta_of_A(A, m, k, r0)
    x = k * r0
    nv, nd = specfun.bessel_n(m, x)
    den = nv * (A - 0.5 / r0) - k * nd
    closed = -2.0 * math.cos(eta) ** 2 / (math.pi * r0 * den * den)
    rel = abs(fd - closed) / abs(closed) if closed != 0 else abs(fd)
    return MonotonicityReport(m=m, k=float(k), eta=float(eta), sensitivity=fd, closed_form=closed,
                              relative_difference=float(rel), passed=bool(fd <= 0.0))
