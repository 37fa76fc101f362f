"""Threshold criticality, the beta corrections and the counting theorem.

The net bound-state count ``N_m = n_plus - n_minus`` of partial wave ``m``
equals ``[delta_m(M) + beta1 pi] - [delta_m(-M) + beta2 pi]`` divided by ``pi``,
where ``beta1, beta2`` are nonzero only when the threshold log-derivative
``A_m(+-M, 1)`` coincides with ``rho_m = (1/2 - m)/r0``.

Critical cases are classified by the sign of ``D = A_m - B_m`` just inside
the bound region next to the threshold and by the order at which ``D`` leaves
zero.  With ``D`` above zero inside the region and a nonvanishing first
derivative the case is ``c1`` (at ``+M``) or ``c1'`` (at ``-M``); above zero
with vanishing first derivatives ``c2``/``c2'``; below with vanishing
derivatives ``c3``/``c3'``; below with nonvanishing first derivative
``c4``/``c4'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exterior
from .errors import CriticalityError, LedgerError
from .exterior import ThresholdSide, threshold_rho
from .interior import DEFAULT_RTOL, integrate_interior, shoot
from .phase import ACCURACY, threshold_crossings, threshold_phase
from .spectrum import Kind, find_bound_states

CRITICAL_TOL = 1e-6
MAX_ORDER = 3
_PROBE_RTOL = 1e-12
# one-sided offsets (in units of M) at which D is sampled for the order fit
_OFFSETS = 1e-2 * 4.0 ** -np.arange(5)


@dataclass(frozen=True)
class CriticalClassification:
    side: ThresholdSide
    is_critical: bool
    case_id: str            # "none", "c1".."c4" at +M, "c1'".."c4'" at -M
    matched_derivative_order: int | None
    half_bound: bool
    gap: float              # A_m(+-M, 1) - rho_m
    slope_difference: float | None = None   # B' - A' at threshold (sign of epsilon)

    @property
    def above(self):
        """``A > B`` just inside the bound region (cases 1 and 2)."""
        return self.case_id.rstrip("'") in ("c1", "c2")


def classify_case(side, above, order):
    """Case label from the side, the sign of ``A - B`` inside, and the vanishing order."""
    side = ThresholdSide.parse(side)
    if order == 0:
        base = "c1" if above else "c4"
    else:
        base = "c2" if above else "c3"
    return base if side is ThresholdSide.PLUS else base + "'"


def _threshold_A(spec, m, side, lam=1.0, rtol=_PROBE_RTOL):
    shot = shoot(spec, m, side.sign * spec.mass, lam, rtol=rtol)
    return float(shot.R), float(shot.dR)


def threshold_slope_difference(spec, m, side, lam=1.0):
    """``B'_m(+-M) - A'_m(+-M, lam)``; infinite for ``m <= 1``."""
    M, r0 = spec.mass, spec.r0
    if m <= 1:
        return side.sign * math.inf
    sol = integrate_interior(spec, lam, m, side.sign * M, rtol=_PROBE_RTOL)
    dA = -sol.weight / sol.R_at_r0 ** 2
    dB = side.sign * M * r0 / (m - 1)
    return dB - dA


def _inside_difference(spec, m, side, s, lam):
    """``A_m - B_m`` at ``E = side (M - s M)`` for an array of offsets ``s``."""
    M, r0 = spec.mass, spec.r0
    E = side.sign * (M - s * M)
    A = shoot(spec, m, E, lam, rtol=_PROBE_RTOL).log_derivative
    B = exterior.exterior_log_derivative(m, E, r0, M)
    return A - B


def detect_critical(spec, m, side, *, critical_tol=CRITICAL_TOL, lam=1.0):
    """Decide whether ``A_m(+-M, 1) = rho_m`` and classify the critical case.

    The vanishing order is read from the local power of ``D(s) - D(0)`` over
    geometrically shrinking offsets ``s`` inside the bound region, so no
    derivative of ``B`` beyond the first is ever formed (``B`` carries
    logarithms of ``kappa`` and is not smooth in ``E`` at threshold).

    Raises
    ------
    CriticalityError
        When ``D`` stays flat beyond the third order.
    """
    side = ThresholdSide.parse(side)
    r0 = spec.r0
    rho = threshold_rho(m, r0)
    R, dR = _threshold_A(spec, m, side, lam)
    gap = dR / R - rho if R != 0 else math.inf
    half = m <= 1
    if spec.is_null or not abs(gap) <= critical_tol / r0:
        return CriticalClassification(side, False, "none", None, False, float(gap))
    slope = threshold_slope_difference(spec, m, side, lam)
    diffs = _inside_difference(spec, m, side, _OFFSETS, lam) - gap
    if m <= 1:
        # |B'| is infinite at threshold and B falls below rho on both sides
        above = True
        order = 0
    else:
        if not np.all(np.isfinite(diffs)) or np.all(diffs == 0):
            raise CriticalityError(f"m={m} side {side.label}: A - B indistinguishable from zero")
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = np.log(np.abs(diffs[:-1] / diffs[1:])) / math.log(4.0)
        power = float(np.median(powers[np.isfinite(powers)])) if np.any(np.isfinite(powers)) else math.inf
        order = int(round(power)) - 1
        if order < 0:
            order = 0
        if order > MAX_ORDER or not math.isfinite(power):
            raise CriticalityError(
                f"m={m} side {side.label}: derivatives agree beyond order {MAX_ORDER}"
            )
        above = bool(diffs[-1] > 0)
    case = classify_case(side, above, order)
    return CriticalClassification(side, True, case, order if order >= 1 else None, half,
                                  float(gap), float(slope))


@dataclass(frozen=True)
class BetaAssignment:
    beta1: int
    beta2: int
    advisory: bool
    notes: tuple = ()


_BETA_TABLE = {"c1": 0, "c3": 0, "c2": -1, "c4": -1}


def _beta(cls, m):
    """Return ``(beta, advisory, note)`` for one threshold."""
    if not cls.is_critical:
        return 0, False, None
    base = cls.case_id.rstrip("'")
    if m > 1:
        return _BETA_TABLE[base], False, None
    if m == 1 and base == "c1":
        return -1, False, None
    note = f"m={m} critical case {cls.case_id} at {cls.side.label} has no listed beta rule"
    return 0, True, note


def assign_betas(class_plus, class_minus, m):
    """Corrections for the two thresholds; advisory where no rule applies."""
    b1, adv1, n1 = _beta(class_plus, m)
    b2, adv2, n2 = _beta(class_minus, m)
    return BetaAssignment(b1, b2, adv1 or adv2, tuple(n for n in (n1, n2) if n))


@dataclass(frozen=True)
class LevinsonReport:
    m: int
    n_plus: int
    n_minus: int
    net_count: int
    delta_plus: float
    delta_minus: float
    beta1: int
    beta2: int
    residual: float
    passed: bool
    advisory: bool
    class_plus: CriticalClassification = field(repr=False)
    class_minus: CriticalClassification = field(repr=False)
    crossing_plus: int = 0
    crossing_minus: int = 0
    extrapolation_residual: float = 0.0
    threshold_states: tuple = ()
    complex_energy_warning: bool = False
    notes: tuple = ()

    @property
    def status(self):
        if self.advisory:
            return "advisory"
        return "pass" if self.passed else "fail"


def _threshold_state(cls, m):
    """Kind of the normalizable state sitting on a critical threshold (``m >= 2``)."""
    if not cls.is_critical or m <= 1:
        return None
    base = cls.case_id.rstrip("'")
    if base in ("c2", "c3"):
        return Kind.PAIR
    # epsilon / R(r0)^2 = B' - A'
    return Kind.PARTICLE if cls.slope_difference > 0 else Kind.ANTIPARTICLE


def _absorbed(state, side, spec, m, critical_tol):
    """Whether a root is indistinguishable from a state on the critical threshold."""
    if (state.E > 0) != (side is ThresholdSide.PLUS):
        return False
    B = exterior.b_of_kappa(m, state.kappa, spec.r0)
    return abs(B - threshold_rho(m, spec.r0)) <= 2.0 * critical_tol / spec.r0


def verify_theorem(spec, m, *, critical_tol=CRITICAL_TOL, accuracy=ACCURACY, rtol=DEFAULT_RTOL,
                   spectrum=None):
    """Assemble spectrum counts, threshold phases and corrections for one ``m``.

    On a non-critical side the phase is the extrapolated small-``k`` limit.  On
    a critical side the extrapolation cannot converge; there the phase is
    ``pi`` times the crossings before ``lam = 1`` plus one when ``A`` arrives
    at ``rho_m`` from above.  A normalizable state sitting on a critical
    threshold (``m >= 2``) joins the counts according to the sign of
    ``B' - A'``.
    """
    spec_result = spectrum if spectrum is not None else find_bound_states(spec, 1.0, m, rtol=rtol)
    states = list(spec_result.states)
    classes, deltas, crossings = {}, {}, {}
    extrap = 0.0
    notes = []
    extra = []
    for side in (ThresholdSide.PLUS, ThresholdSide.MINUS):
        cls = detect_critical(spec, m, side, critical_tol=critical_tol)
        cr = threshold_crossings(spec, m, side, rtol=rtol, critical_tol=critical_tol, locate=False)
        classes[side], crossings[side] = cls, cr.count
        if cls.is_critical:
            deltas[side] = math.pi * (cr.count + (1 if cr.arrival == -1 else 0))
            notes.append(f"{side.label} critical ({cls.case_id}); phase from crossing history")
            kept = [s for s in states if not _absorbed(s, side, spec, m, critical_tol)]
            if len(kept) != len(states):
                notes.append(f"{len(states) - len(kept)} root(s) within the critical window "
                             f"at {side.label} taken as the threshold state")
            states = kept
            kind = _threshold_state(cls, m)
            if kind is not None:
                extra.append((side, kind))
        else:
            tp = threshold_phase(spec, m, side, rtol=rtol, accuracy=accuracy, crossing=cr.count)
            deltas[side] = tp.delta
            extrap = max(extrap, tp.extrapolation_residual)
    kinds = [s.kind for s in states] + [k for _, k in extra]
    pairs = sum(k is Kind.PAIR for k in kinds)
    n_plus = sum(k is Kind.PARTICLE for k in kinds) + pairs
    n_minus = sum(k is Kind.ANTIPARTICLE for k in kinds) + pairs
    betas = assign_betas(classes[ThresholdSide.PLUS], classes[ThresholdSide.MINUS], m)
    notes.extend(betas.notes)
    N = n_plus - n_minus
    dp, dm = deltas[ThresholdSide.PLUS], deltas[ThresholdSide.MINUS]
    residual = N * math.pi - ((dp + betas.beta1 * math.pi) - (dm + betas.beta2 * math.pi))
    if spec_result.complex_energy_warning:
        notes.append("near-double root in the energy scan (possible complex pair)")
    return LevinsonReport(
        m=m, n_plus=n_plus, n_minus=n_minus, net_count=N, delta_plus=float(dp), delta_minus=float(dm),
        beta1=betas.beta1, beta2=betas.beta2, residual=float(residual),
        passed=bool(abs(residual) <= accuracy), advisory=betas.advisory,
        class_plus=classes[ThresholdSide.PLUS], class_minus=classes[ThresholdSide.MINUS],
        crossing_plus=crossings[ThresholdSide.PLUS], crossing_minus=crossings[ThresholdSide.MINUS],
        extrapolation_residual=float(extrap), threshold_states=tuple(extra),
        complex_energy_warning=spec_result.complex_energy_warning, notes=tuple(notes),
    )


# ------------------------------------------------------------------ coupling history


@dataclass(frozen=True)
class LedgerEvent:
    lam: float
    kind: str               # "threshold" or "tangency"
    side: ThresholdSide | None
    direction: int          # threshold: +1 when A decreases through rho; tangency: +1 creation
    d_plus: int
    d_minus: int
    n_plus: int
    n_minus: int

    @property
    def net_count(self):
        return self.n_plus - self.n_minus


def _threshold_update(side, direction, slope_difference):
    """Change of ``(n_plus, n_minus)`` when ``A`` passes ``rho_m`` at one threshold.

    ``slope_difference = B' - A'`` at the crossing is the sign of the norm
    factor of the state moving through the threshold.
    """
    particle = slope_difference > 0
    if side is ThresholdSide.PLUS:
        # decreasing A: particle enters or antiparticle leaves
        return (direction, 0) if particle else (0, -direction)
    # at -M, decreasing A: antiparticle enters or particle leaves
    return (0, direction) if not particle else (-direction, 0)


def lambda_ledger(spec, m, *, n_lambda=17, rtol=DEFAULT_RTOL, n_panels=1000, bisect_steps=8,
                  critical_tol=CRITICAL_TOL):
    """Chronological threshold and tangency events as ``lam`` goes from 0 to 1.

    Threshold events come from the crossing tracker at both thresholds.
    Pair events are what remains of the count changes between consecutive
    spectra on a ``lam`` grid; they must change both counts by the same amount.

    Raises
    ------
    LedgerError
        When the residual count change between two grid points is not
        pair-like (events too close to be ordered at this resolution).
    """
    if spec.is_null:
        return []
    grid = np.linspace(0.0, 1.0, n_lambda)
    raw, touching, touch_p, touch_m = [], [], 0, 0
    for side in (ThresholdSide.PLUS, ThresholdSide.MINUS):
        cr = threshold_crossings(spec, m, side, rtol=rtol, critical_tol=critical_tol)
        for ev in cr.events:
            slope = threshold_slope_difference(spec, m, side, ev.lam)
            dp, dm = _threshold_update(side, ev.direction, slope)
            raw.append((ev.lam, "threshold", side, ev.direction, dp, dm))
        if cr.touch_at_end:
            touching.append(side)
            if m >= 2:
                # a normalizable state arriving on the threshold at lam = 1
                direction = -cr.arrival
                slope = threshold_slope_difference(spec, m, side, 1.0)
                dp, dm = _threshold_update(side, direction, slope)
                raw.append((1.0, "threshold", side, direction, dp, dm))
                touch_p += dp
                touch_m += dm

    def counts(lam):
        if lam == 0.0:
            return 0, 0
        res = find_bound_states(spec, lam, m, n_panels=n_panels, rtol=rtol, check_resolution=False)
        if lam < 1.0 or not touching:
            return res.n_plus, res.n_minus
        kept = [st for st in res.states
                if not any(_absorbed(st, side, spec, m, critical_tol) for side in touching)]
        pairs = sum(st.kind is Kind.PAIR for st in kept)
        # absorbed roots are replaced by the threshold events recorded at lam = 1
        return (sum(st.kind is Kind.PARTICLE for st in kept) + pairs + touch_p,
                sum(st.kind is Kind.ANTIPARTICLE for st in kept) + pairs + touch_m)

    snap = [counts(l) for l in grid]
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        pred_p = sum(e[4] for e in raw if a < e[0] <= b or (i == 0 and e[0] == 0.0))
        pred_m = sum(e[5] for e in raw if a < e[0] <= b or (i == 0 and e[0] == 0.0))
        rest_p = snap[i + 1][0] - snap[i][0] - pred_p
        rest_m = snap[i + 1][1] - snap[i][1] - pred_m
        if rest_p != rest_m:
            raise LedgerError(
                f"m={m}: count change in lam ({a:.4g}, {b:.4g}] is not explained by threshold "
                f"and pair events (residual {rest_p:+d}, {rest_m:+d})"
            )
        if rest_p:
            thresholds = [e for e in raw if e[1] == "threshold" and a < e[0] <= b]
            lam_star = _locate_pair(counts, a, b, snap[i], thresholds, bisect_steps)
            sign = 1 if rest_p > 0 else -1
            for _ in range(abs(rest_p)):
                raw.append((lam_star, "tangency", None, sign, sign, sign))
    raw.sort(key=lambda e: (e[0], e[1] != "threshold"))
    events, n_p, n_m = [], 0, 0
    for lam, kind, side, direction, dp, dm in raw:
        n_p += dp
        n_m += dm
        events.append(LedgerEvent(float(lam), kind, side, direction, dp, dm, n_p, n_m))
    return events


def _locate_pair(counts, a, b, start_counts, thresholds, steps):
    """Bisect for the coupling at which a pair event happens.

    Counts at trial couplings are compared with the start counts advanced by
    the threshold events already passed, so only the pair change is tracked.
    """
    for _ in range(steps):
        mid = 0.5 * (a + b)
        c = counts(mid)
        pred_p = start_counts[0] + sum(e[4] for e in thresholds if e[0] <= mid)
        pred_m = start_counts[1] + sum(e[5] for e in thresholds if e[0] <= mid)
        if (c[0] - pred_p) == 0 and (c[1] - pred_m) == 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)
