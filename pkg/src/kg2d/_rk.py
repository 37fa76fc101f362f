"""Batched Dormand-Prince 5(4) integrator with per-element step control.

Every column of the state array is an independent initial-value problem
(typically one energy or one coupling).  Step sizes are chosen element by
element, so the result for a column does not depend on what else is in the
batch; elementwise IEEE arithmetic then makes batched and single evaluations
bit-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

_SAFETY = 0.9
_FAC_MIN, _FAC_MAX = 0.2, 5.0
_MAX_ITER = 200_000


def dopri45(rhs, x0, x1, y0, *, rtol, atol, h0, max_step=None, record=False, scale=1.0):
    """Integrate ``y' = rhs(x, y)`` from ``x0`` to ``x1`` for every column of ``y0``.

    Parameters
    ----------
    rhs : callable
        ``rhs(x, y)`` with ``x`` of shape ``(n,)`` and ``y`` of shape
        ``(ncomp, n)``; returns an array shaped like ``y``.
    x0, x1 : float
        Common interval, ``x1 > x0``.
    y0 : ndarray, shape (ncomp, n)
    rtol : float
    atol : ndarray, shape (ncomp,)
    h0 : float
        Initial step.
    max_step : float, optional
    record : bool
        If true, also return the accepted points as ``(xs, ys)`` lists.
        Only meaningful for ``n == 1``.
    scale : float
        Multiplies ``x`` in error messages (to report physical radii).

    Returns
    -------
    y : ndarray, shape (ncomp, n)
    trace : tuple of lists or None
    """
    y = np.array(y0, dtype=float, copy=True)
    n = y.shape[1]
    x = np.full(n, float(x0))
    h = np.full(n, float(h0))
    hmax = np.inf if max_step is None else float(max_step)
    atol = np.asarray(atol, dtype=float)[:, None]
    active = np.ones(n, dtype=bool)
    k1 = rhs(x, y)
    xs, ys = ([float(x0)], [y[:, 0].copy()]) if record else (None, None)

    for _ in range(_MAX_ITER):
        if not active.any():
            break
        remaining = x1 - x
        h = np.minimum(np.minimum(h, hmax), remaining)
        last = h >= remaining
        hh = np.where(active, h, 0.0)

        k2 = rhs(x + _C2 * hh, y + hh * (_A21 * k1))
        k3 = rhs(x + _C3 * hh, y + hh * (_A31 * k1 + _A32 * k2))
        k4 = rhs(x + _C4 * hh, y + hh * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(x + _C5 * hh, y + hh * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(x + hh, y + hh * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + hh * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        x_new = np.where(last, x1, x + hh)
        k7 = rhs(x_new, y_new)
        err = hh * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = np.sqrt(np.mean((err / sc) ** 2, axis=0))

        accept = active & (en <= 1.0)
        with np.errstate(divide="ignore"):
            fac = np.where(en == 0.0, _FAC_MAX, _SAFETY * en ** -0.2)
        fac = np.clip(fac, _FAC_MIN, _FAC_MAX)
        fac = np.where(accept, fac, np.minimum(fac, 1.0))

        x = np.where(accept, x_new, x)
        y = np.where(accept, y_new, y)
        k1 = np.where(accept, k7, k1)
        h = np.where(active, h * fac, h)
        active = active & ~(accept & last)

        if record and accept[0]:
            xs.append(float(x[0]))
            ys.append(y[:, 0].copy())

        tiny = active & (h < 1e-14 * np.maximum(np.abs(x), 1e-300))
        if tiny.any():
            i = int(np.argmax(tiny))
            raise NumericError(
                f"step size underflow at radius {x[i] * scale:.6g}", radius=float(x[i] * scale)
            )
    else:
        i = int(np.argmax(active))
        raise NumericError("integrator iteration limit reached", radius=float(x[i] * scale))

    return y, ((xs, ys) if record else None)
