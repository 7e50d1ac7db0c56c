"""Pure-Python orbit kernel.

This is the reference twin of the compiled ``_kernel`` extension and is
selected automatically when the extension is not importable.  Both expose
``advance`` and ``trajectory`` with identical signatures and results.

Map specs are tuples ``(kind, b, t, nu)`` with raw ``(mantissa, exponent)``
pairs for the three reals; ``kind`` is ``KIND_CANONICAL`` or ``KIND_RIGID``.
Points are circle coordinates in [0, 1).  The flat spot of the canonical
map is the arc [0, b].
"""

from __future__ import annotations

import math

import mpmath
from mpmath import mpf

from .bigreal import from_raw, to_raw

KIND_CANONICAL = 0
KIND_RIGID = 1

BACKEND = "python"

# rounding errors committed by one map evaluation, in units of 2**-prec
STEP_ULPS = 8.0


def _deriv_double(u: float, w: float, nu: float, inv_span: float) -> float:
    # Df of the canonical bridge from the rescaled coordinates u and w = 1-u
    if u <= 0.0 or w <= 0.0:
        return 0.0
    p = u**nu
    q = w**nu
    s = p + q
    return nu * p * q / (u * w * s * s) * inv_span


def _step_error(err: float, u: float, w: float, nu: float, inv_span: float, prec: int) -> float:
    du = err * inv_span
    dmax = max(
        _deriv_double(u, w, nu, inv_span),
        _deriv_double(u + du, w - du, nu, inv_span),
        _deriv_double(u - du, w + du, nu, inv_span),
    )
    return err * dmax + STEP_ULPS * 2.0 ** (-prec)


class _Stepper:
    def __init__(self, spec, prec: int):
        kind, b, t, nu = spec
        self.kind = kind
        self.prec = prec
        with mpmath.workprec(prec):
            self.b = +from_raw(*b)
            self.t = +from_raw(*t)
            self.nu = +from_raw(*nu)
            self.span = 1 - self.b
        self.nu_int = int(self.nu) if self.nu == int(self.nu) else None
        self.nu_f = float(self.nu)
        self.inv_span = 1.0 / float(self.span) if self.kind == KIND_CANONICAL else 1.0

    def step(self, x: mpf, err: float):
        """One application of the map; returns (image, winding, err, in_flat)."""
        b, t = self.b, self.t
        if self.kind == KIND_RIGID:
            v = x + t
            err = err + STEP_ULPS * 2.0 ** (-self.prec)
            in_flat = x == 0
        elif x <= b:
            v = t
            in_flat = True
            # the flat spot forgets the incoming error, unless x may lie just outside
            if err > 0 and x + err > b:
                u = float((x + err - b) / self.span)
                err = _step_error(err, u, 1.0 - u, self.nu_f, self.inv_span, self.prec)
            else:
                err = STEP_ULPS * 2.0 ** (-self.prec)
        else:
            in_flat = False
            u = (x - b) / self.span
            w = (1 - x) / self.span
            if self.nu_int is not None:
                p = u**self.nu_int
                q = w**self.nu_int
            else:
                p = u**self.nu
                q = w**self.nu
            v = t + p / (p + q)
            err = _step_error(err, float(u), float(w), self.nu_f, self.inv_span, self.prec)
        wind = 0
        if v >= 1:
            v -= 1
            wind = 1
        return v, wind, err, in_flat


def advance(spec, x, n: int, prec: int, err: float = 0.0):
    """Apply the map ``n`` times to the circle point ``x``.

    Returns ``(x_n, winding, err, absorbed_at)`` where ``x_n`` is a raw pair,
    ``winding`` the number of times the lift crossed an integer, ``err`` the
    propagated absolute error estimate and ``absorbed_at`` the first offset
    ``j`` in ``0..n-1`` at which the current point lay in the closed flat
    spot (``-1`` if none).
    """
    st = _Stepper(spec, prec)
    absorbed = -1
    winding = 0
    with mpmath.workprec(prec):
        y = +from_raw(*x)
        for j in range(n):
            y, w, err, flat = st.step(y, err)
            winding += w
            if flat and absorbed < 0:
                absorbed = j
        return to_raw(y), winding, err, absorbed


def trajectory(spec, x, n: int, prec: int, err: float = 0.0):
    """Like :func:`advance` but keeps every image.

    Returns ``(points, windings, errors, absorbed_at)``; ``points[j]`` is the
    image after ``j + 1`` steps as a raw pair and ``windings[j]`` the winding
    increment of that single step.
    """
    st = _Stepper(spec, prec)
    points = []
    windings = []
    errors = []
    absorbed = -1
    with mpmath.workprec(prec):
        y = +from_raw(*x)
        for j in range(n):
            y, w, err, flat = st.step(y, err)
            if flat and absorbed < 0:
                absorbed = j
            points.append(to_raw(y))
            windings.append(w)
            errors.append(err if math.isfinite(err) else math.inf)
    return points, windings, errors, absorbed
