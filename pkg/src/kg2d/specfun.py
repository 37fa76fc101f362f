"""Integer-order cylinder functions with first derivatives.

The four kernels return :class:`CylEval` pairs ``(value, derivative)`` where the
derivative is taken with respect to the argument.  Values come from the AMOS
routines wrapped by :mod:`scipy.special`; derivatives use the standard
recurrences

    J'_m = (J_{m-1} - J_{m+1}) / 2        I'_m = (I_{m-1} + I_{m+1}) / 2
    N'_m = (N_{m-1} - N_{m+1}) / 2        K'_m = -(K_{m-1} + K_{m+1}) / 2

so every derivative is consistent with its value to working precision.

The modified pair is what the sub-threshold matching needs: for real
``kappa`` the regular interior solution ``J_m(i kappa r)`` is a real multiple
of ``I_m(kappa r)`` and the decaying exterior solution ``H1_m(i kappa r)`` is a
real multiple of ``K_m(kappa r)``.  Only log-derivatives enter the matching,
so :func:`k_log_derivative` and :func:`i_log_derivative` work on exponentially
scaled values and never over- or underflow.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import DomainError

MAX_ORDER = 16
EULER_GAMMA = 0.5772156649015329

# below this argument the log-derivatives switch to their small-x expansions
SMALL_X = 1e-4


class CylEval(NamedTuple):
    value: float | np.ndarray
    derivative: float | np.ndarray


def _check_order(m):
    if isinstance(m, (bool, np.bool_)) or not isinstance(m, (int, np.integer)):
        raise DomainError(f"order must be a non-negative integer, got {m!r}")
    if m < 0 or m > MAX_ORDER:
        raise DomainError(f"order {m} outside supported range 0..{MAX_ORDER}")
    return int(m)


def _check_arg(x, *, allow_zero, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    if allow_zero:
        if np.any(arr < 0):
            raise DomainError(f"{name}: argument must be >= 0")
    elif np.any(arr <= 0):
        raise DomainError(f"{name}: argument must be > 0")
    return arr


def _out(value, derivative, scalar):
    if scalar:
        return CylEval(float(value), float(derivative))
    return CylEval(value, derivative)


def bessel_j(m, x):
    """Bessel function of the first kind ``J_m(x)`` and ``J'_m(x)``."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=True, name="bessel_j")
    v = special.jv(m, arr)
    if m == 0:
        d = -special.jv(1, arr)
    else:
        d = 0.5 * (special.jv(m - 1, arr) - special.jv(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def bessel_n(m, x):
    """Neumann function ``N_m(x)`` (``Y_m`` in other notations) and ``N'_m(x)``."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=False, name="bessel_n")
    v = special.yv(m, arr)
    if m == 0:
        d = -special.yv(1, arr)
    else:
        d = 0.5 * (special.yv(m - 1, arr) - special.yv(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def bessel_i(m, x):
    """Modified Bessel function ``I_m(x)`` and ``I'_m(x)``."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=True, name="bessel_i")
    v = special.iv(m, arr)
    if m == 0:
        d = special.iv(1, arr)
    else:
        d = 0.5 * (special.iv(m - 1, arr) + special.iv(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def bessel_k(m, x):
    """Modified Bessel function ``K_m(x)`` and ``K'_m(x)``.

    Underflows to zero for ``x`` beyond roughly 700; use
    :func:`bessel_k_scaled` when only ratios are needed.
    """
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=False, name="bessel_k")
    v = special.kv(m, arr)
    d = -special.kv(1, arr) if m == 0 else -0.5 * (special.kv(m - 1, arr) + special.kv(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def bessel_k_scaled(m, x):
    """``exp(x) K_m(x)`` and ``exp(x) K'_m(x)``."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=False, name="bessel_k_scaled")
    v = special.kve(m, arr)
    d = -special.kve(1, arr) if m == 0 else -0.5 * (special.kve(m - 1, arr) + special.kve(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def bessel_i_scaled(m, x):
    """``exp(-x) I_m(x)`` and ``exp(-x) I'_m(x)``."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=True, name="bessel_i_scaled")
    v = special.ive(m, arr)
    d = special.ive(1, arr) if m == 0 else 0.5 * (special.ive(m - 1, arr) + special.ive(m + 1, arr))
    return _out(v, d, np.ndim(x) == 0)


def k_log_derivative(m, x):
    """Return ``x K'_m(x) / K_m(x)`` for ``x >= 0``.

    At ``x = 0`` this is the limit ``-m``.  For ``x < SMALL_X`` the leading
    small-argument correction is used (log-corrected for ``m = 0, 1``); above
    that the ratio of exponentially scaled values.
    """
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=True, name="k_log_derivative")
    out = np.empty_like(arr)
    small = arr < SMALL_X
    big = ~small
    if np.any(big):
        xb = arr[big]
        out[big] = xb * bessel_k_scaled(m, xb).derivative / special.kve(m, xb)
    if np.any(small):
        xs = arr[small]
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(xs / 2.0) + EULER_GAMMA
            x2 = xs * xs
            # K0 = -lg (1 + x^2/4) + x^2/4,  x K1 = 1 + (x^2/2)(lg - 1/2), up to O(x^4 lg)
            k0 = -lg * (1.0 + 0.25 * x2) + 0.25 * x2
            xk1 = 1.0 + 0.5 * x2 * (lg - 0.5)
            if m == 0:
                val = -xk1 / k0
            elif m == 1:
                val = -1.0 - x2 * k0 / xk1
            else:
                val = -m - xs * xs / (2.0 * (m - 1))
        out[small] = np.where(xs == 0.0, -float(m), val)
    return float(out) if np.ndim(x) == 0 else out


def i_log_derivative(m, x):
    """Return ``x I'_m(x) / I_m(x)`` for ``x >= 0`` (limit ``m`` at zero)."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=True, name="i_log_derivative")
    out = np.empty_like(arr)
    small = arr < SMALL_X
    big = ~small
    if np.any(big):
        xb = arr[big]
        out[big] = xb * bessel_i_scaled(m, xb).derivative / special.ive(m, xb)
    if np.any(small):
        xs = arr[small]
        out[small] = m + xs * xs / (2.0 * (m + 1))
    return float(out) if np.ndim(x) == 0 else out


def k_ratio_squared(m, x):
    """Return ``K_{m-1}(x) K_{m+1}(x) / K_m(x)**2`` (with ``K_{-1} = K_1``)."""
    m = _check_order(m)
    arr = _check_arg(x, allow_zero=False, name="k_ratio_squared")
    km = special.kve(m, arr)
    lo = special.kve(abs(m - 1), arr)
    hi = special.kve(m + 1, arr)
    with np.errstate(over="ignore"):
        out = (lo / km) * (hi / km)
    return float(out) if np.ndim(x) == 0 else out

