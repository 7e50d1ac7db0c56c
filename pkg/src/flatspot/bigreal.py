"""Adjustable-precision reals on top of :mod:`mpmath`.

Every quantity in the package is an ``mpmath.mpf``.  Precision is measured
in bits and is always set explicitly through :func:`working`, never through
the global ``mp.dps`` knob, so that pure functions stay reentrant.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from decimal import Decimal, InvalidOperation

import mpmath
from mpmath import mpf
from mpmath.libmp import from_man_exp

MIN_PRECISION = 64
DEFAULT_PRECISION = 256
DEFAULT_CEILING = 4096

BigReal = mpmath.mpf


@contextmanager
def working(bits: int):
    """Run the body at ``bits`` of binary precision."""
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits, got {bits}")
    with mpmath.workprec(int(bits)):
        yield


def exact(x) -> mpf:
    """``x`` as an mpf without rounding an existing mpf to the ambient precision."""
    return x if isinstance(x, mpf) else mpf(x)


def exact_frac(x) -> mpf:
    """Fractional part of ``x`` computed without rounding."""
    man, exp = to_raw(x)
    if exp >= 0:
        return mpf(0)
    # shifting right floors, also for negative mantissas
    k = man >> -exp
    return from_raw(man - (k << -exp), exp)


def current_precision() -> int:
    return mpmath.mp.prec


def parse_decimal(text: str | int | float, bits: int) -> mpf:
    """Read a decimal string exactly, then round once to ``bits``.

    Binary floats are accepted for convenience in tests but configs must use
    strings so that the value does not depend on the reader's precision.
    """
    if isinstance(text, str):
        try:
            Decimal(text)
        except InvalidOperation as exc:
            raise ValueError(f"not a decimal number: {text!r}") from exc
    with working(bits):
        return +mpf(text)


def digits_for(bits: int) -> int:
    """Significant decimal digits that round-trip a ``bits``-bit mantissa."""
    return int(math.ceil(bits * math.log10(2))) + 1


def to_decimal(x, bits: int | None = None) -> str:
    """Full-precision decimal rendering used for every CSV export."""
    bits = bits or current_precision()
    return mpmath.nstr(exact(x), digits_for(bits), min_fixed=-4, max_fixed=4, strip_zeros=False)


def sig(x, figures: int = 4) -> str:
    """Plain scientific notation with ``figures`` significant digits."""
    return f"{float(x):.{figures - 1}e}"


_SUPERSCRIPT = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


def mixed_format(x, figures: int = 4) -> str:
    """Mixed notation such as ``64.04·10⁻⁶`` or ``.2637``.

    Numbers in [1e-2, 1) print as a bare decimal fraction and those in
    [1, 100) as plain decimals; others get an
    exponent that is a multiple of three with the mantissa in [0.1, 100),
    keeping ``figures`` significant digits.
    """
    v = float(x)
    if v == 0:
        return "0"
    if 1e-2 <= abs(v) < 1:
        text = f"{v:.{figures}f}".lstrip("0") if v > 0 else f"{v:.{figures}f}"
        return text.replace("-0.", "-.")
    if 1 <= abs(v) < 100:
        return f"{v:.{figures - 1 - int(math.floor(math.log10(abs(v))))}f}"
    exp3 = 3 * math.floor((math.log10(abs(v)) + 1) / 3)
    mant = v / 10.0**exp3
    if abs(mant) < 1:
        decimals = figures
    else:
        decimals = max(figures - 1 - int(math.floor(math.log10(abs(mant)))), 0)
    text = f"{mant:.{decimals}f}"
    if text.startswith("0."):
        text = text[1:]
    return f"{text}·10{str(exp3).translate(_SUPERSCRIPT)}"


def golden_mean(bits: int) -> mpf:
    """(sqrt(5) - 1)/2 computed at ``bits``, not read from a literal."""
    with working(bits):
        return (mpmath.sqrt(5) - 1) / 2


def to_raw(x) -> tuple[int, int]:
    """Exact (mantissa, exponent) pair with ``x = mantissa * 2**exponent``."""
    sign, man, exp, _ = mpf(x)._mpf_ if not isinstance(x, mpf) else x._mpf_
    if man == 0:
        if exp:  # inf / nan special values carry a nonzero exp with man 0
            raise ValueError(f"non-finite value {x}")
        return 0, 0
    man = int(man)
    return (-man if sign else man), int(exp)


def from_raw(man: int, exp: int) -> mpf:
    """Inverse of :func:`to_raw`; exact, no rounding."""
    x = mpf.__new__(mpf)
    x._mpf_ = from_man_exp(man, exp)
    return x


def ulp(bits: int) -> float:
    return 2.0 ** (-bits)
