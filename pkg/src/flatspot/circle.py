"""Arcs and distances on the circle R/Z.

Circle points are reals in [0, 1).  An arc is stored by its two endpoints
in positive (counter-clockwise) order, so ``Arc(0.9, 0.1)`` wraps through 0.
"""

from __future__ import annotations

from typing import NamedTuple

import mpmath
from mpmath import mpf


def frac(x):
    return x - mpmath.floor(x)


def oriented(x, y):
    """Length of the positively oriented arc from ``x`` to ``y``."""
    return frac(y - x)


def arc_length(x, y):
    """Length of the open shortest arc ``(x, y)``."""
    d = frac(y - x)
    return min(d, 1 - d)


def shortest_arc(x, y) -> "Arc":
    """The open shortest arc between ``x`` and ``y`` as a positively ordered Arc.

    At distance exactly 1/2 the arc containing a right neighbourhood of 0 is
    chosen.
    """
    d = frac(y - x)
    if d < mpf(1) / 2:
        return Arc(frac(x), frac(y))
    if d > mpf(1) / 2:
        return Arc(frac(y), frac(x))
    a, b = Arc(frac(x), frac(y)), Arc(frac(y), frac(x))
    # a right neighbourhood of 0 lies in the arc that starts at 0 or wraps past it
    return a if a.left == 0 or a.left > a.right else b


class Arc(NamedTuple):
    left: mpf
    right: mpf

    @property
    def length(self):
        return frac(self.right - self.left)

    def contains(self, x, closed: bool = True) -> bool:
        d = frac(x - self.left)
        if closed:
            return d <= self.length
        return 0 < d < self.length

    def distance(self, x):
        """Distance from a point to this arc as a set."""
        if self.contains(x):
            return mpf(0)
        return min(frac(x - self.right), frac(self.left - x))

    def side(self, x) -> str:
        """Which side of the arc ``x`` is nearer to: ``'right'`` or ``'left'``."""
        return "right" if frac(x - self.right) <= frac(self.left - x) else "left"

    def gap_to(self, other: "Arc"):
        """Positively oriented gap from the end of ``self`` to the start of ``other``."""
        return frac(other.left - self.right)
