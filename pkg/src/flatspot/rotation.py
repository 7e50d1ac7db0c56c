"""Rotation numbers, continued fractions, closest returns and parameter search.

All decisions about where a rotation number lies are made from one fact
about monotone degree-one lifts: if ``rho != p/q`` then
``f^q(c) - p - c`` has the sign of ``rho - p/q`` for every point ``c``.
Evaluated at the critical value against the convergents of the target,
this gives exact comparisons whose only numerical input is the sign of
one orbit displacement compared with its error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mpf

from . import kernel
from .bigreal import DEFAULT_PRECISION, exact, from_raw, to_raw, working
from .circle import frac
from .errors import BudgetExceeded, InsufficientAccuracy, NonMonotone, OrbitTooShort
from .flatmap import CriticalOrbit, FlatSpotMap, _python_block, _require

DEFAULT_MAX_ITERS = 5_000_000


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotationNumber:
    """Either an exact rational ``p/q`` or an enclosure ``[lo, hi]``."""

    kind: str
    p: int | None = None
    q: int | None = None
    witness: int | None = None
    lo: mpf | None = None
    hi: mpf | None = None

    @classmethod
    def rational(cls, p: int, q: int, witness: int | None = None) -> "RotationNumber":
        fr = Fraction(p, q)
        return cls("rational", fr.numerator, fr.denominator, witness)

    @classmethod
    def enclosure(cls, lo, hi) -> "RotationNumber":
        return cls("irrational", lo=exact(lo), hi=exact(hi))

    @classmethod
    def golden(cls, bits: int = DEFAULT_PRECISION) -> "RotationNumber":
        with working(bits + 8):
            g = (mpmath.sqrt(5) - 1) / 2
            eps = mpmath.ldexp(1, -bits)
            return cls.enclosure(g - eps, g + eps)

    @property
    def is_rational(self) -> bool:
        return self.kind == "rational"

    @property
    def value(self):
        if self.is_rational:
            return mpf(self.p) / self.q
        return (self.lo + self.hi) / 2

    @property
    def error(self):
        if self.is_rational:
            return mpf(0)
        return (self.hi - self.lo) / 2

    @property
    def fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError("irrational rotation number has no exact fraction")
        return Fraction(self.p, self.q)

    def __str__(self) -> str:
        if self.is_rational:
            return f"{self.p}/{self.q}"
        return f"{mpmath.nstr(self.value, 15)} ± {mpmath.nstr(self.error, 3)}"


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients ``a[1..d]`` (``a0`` is the integer part) with convergents.

    ``q(n)`` and ``p(n)`` follow ``q_n = a_n q_{n-1} + q_{n-2}`` with
    ``q_{-1} = 0, q_0 = 1`` and ``p_{-1} = 1, p_0 = a0``.
    """

    a0: int
    quotients: tuple
    certified: tuple = ()
    exact: bool = False

    @classmethod
    def from_quotients(cls, quotients, a0: int = 0, exact: bool = False) -> "ContinuedFraction":
        qs = tuple(int(a) for a in quotients)
        if any(a < 1 for a in qs):
            raise ValueError("partial quotients must be positive integers")
        return cls(a0, qs, (True,) * len(qs), exact)

    @classmethod
    def golden(cls, depth: int) -> "ContinuedFraction":
        return cls.from_quotients([1] * depth)

    @classmethod
    def silver(cls, depth: int) -> "ContinuedFraction":
        """sqrt(2) - 1 = [0; 2, 2, 2, ...]."""
        return cls.from_quotients([2] * depth)

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def a(self, n: int) -> int:
        if n == 0:
            return self.a0
        if not 1 <= n <= self.depth:
            raise IndexError(f"partial quotient a_{n} not available (depth {self.depth})")
        return self.quotients[n - 1]

    def _conv(self):
        ps, qs = [1, self.a0], [0, 1]
        for a in self.quotients:
            ps.append(a * ps[-1] + ps[-2])
            qs.append(a * qs[-1] + qs[-2])
        return ps, qs

    def q(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise IndexError(f"q_{n} not available (depth {self.depth})")
        return self._conv()[1][n + 1]

    def p(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise IndexError(f"p_{n} not available (depth {self.depth})")
        return self._conv()[0][n + 1]

    @property
    def qs(self) -> list:
        return self._conv()[1][1:]

    @property
    def ps(self) -> list:
        return self._conv()[0][1:]

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p(n), self.q(n))

    @property
    def bound(self) -> int:
        """Largest partial quotient: the bounded-type constant on this window."""
        return max(self.quotients) if self.quotients else 0

    def value(self, bits: int = DEFAULT_PRECISION):
        with working(bits):
            return mpf(self.p(self.depth)) / self.q(self.depth)

    def level_for(self, q_max: int) -> int:
        """Largest n with q_n <= q_max."""
        qs = self.qs
        n = 0
        while n + 1 < len(qs) and qs[n + 1] <= q_max:
            n += 1
        return n


def _to_fraction(x) -> Fraction:
    sign, man, exp, _ = exact(x)._mpf_
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v


def _cf_of(fr: Fraction, depth: int) -> list:
    out = []
    x = fr - math.floor(fr)
    while len(out) < depth and x != 0:
        x = 1 / x
        a = math.floor(x)
        out.append(int(a))
        x -= a
    return out


def continued_fraction(rho: RotationNumber, depth: int) -> ContinuedFraction:
    """Partial quotients certified against the enclosure of ``rho``.

    A quotient is certified when both ends of the enclosure share it; the
    set of reals with a given prefix is an interval, so everything in
    between shares it too.
    """
    if rho.is_rational:
        fr = rho.fraction
        qs = _cf_of(fr, depth)
        return ContinuedFraction(math.floor(fr), tuple(qs), (True,) * len(qs), exact=True)
    lo, hi = _to_fraction(rho.lo), _to_fraction(rho.hi)
    if math.floor(lo) != math.floor(hi):
        raise InsufficientAccuracy("enclosure straddles an integer", 0)
    a_lo = _cf_of(lo, depth + 1)
    a_hi = _cf_of(hi, depth + 1)
    n = 0
    while n < min(len(a_lo), len(a_hi)) - 1 and a_lo[n] == a_hi[n]:
        n += 1
    if n < depth:
        raise InsufficientAccuracy(f"only {n} partial quotients are certified by the enclosure", n)
    return ContinuedFraction(math.floor(lo), tuple(a_lo[:depth]), (True,) * depth)


# ---------------------------------------------------------------------------
# orbit displacement of the critical value
# ---------------------------------------------------------------------------


class CriticalWalker:
    """Incremental orbit of the critical value tracking the lift displacement.

    ``displacement`` is ``f^k(c) - c`` after ``k`` steps, with ``c = t``.
    """

    def __init__(self, m: FlatSpotMap, precision: int = DEFAULT_PRECISION):
        self.map = m
        self.prec = precision
        self.spec = m.kernel_spec()
        with working(precision):
            self.c = +frac(m.t)
            self.shift = int(mpmath.floor(m.t))
            in_flat = m.flat_spot.contains(self.c)
        self.x = self.c
        self.winding = 0
        self.err = 8.0 * 2.0 ** (-precision)
        self.steps = 0
        self.absorbed_at: int | None = 1 if in_flat else None

    def advance(self, n: int) -> None:
        if n <= 0:
            return
        if self.spec is not None:
            raw, w, err, hit = kernel.advance(self.spec, to_raw(self.x), n, self.prec, self.err)
            self.x = from_raw(*raw)
        else:
            pts, winds, errs, hit = _python_block(self.map, self.x, n, self.prec, self.err)
            self.x, w, err = pts[-1], sum(winds), errs[-1]
        if hit >= 0 and self.absorbed_at is None:
            # offset 0 is the current point, which is point (steps + 1) of the orbit
            self.absorbed_at = self.steps + 1 + hit
        self.winding += w
        self.err = err
        self.steps += n

    def advance_to(self, k: int) -> None:
        self.advance(k - self.steps)

    def trace(self, n: int):
        """Advance ``n`` steps and yield ``(steps, winding, x, err)`` after each one."""
        if self.spec is not None:
            raw, winds, errs, hit = kernel.trajectory(self.spec, to_raw(self.x), n, self.prec, self.err)
            pts = [from_raw(*r) for r in raw]
        else:
            pts, winds, errs, hit = _python_block(self.map, self.x, n, self.prec, self.err)
        if hit >= 0 and self.absorbed_at is None:
            self.absorbed_at = self.steps + 1 + hit
        for x, w, e in zip(pts, winds, errs):
            self.steps += 1
            self.winding += w
            self.x, self.err = x, e
            yield self.steps, self.winding, x, e

    @property
    def displacement(self):
        with working(self.prec):
            return self.winding + (self.x - self.c) + self.shift * self.steps

    def sign_against(self, p: int) -> int:
        """Certified sign of ``f^k(c) - p - c`` or 0 when inside the error bound."""
        d = self.displacement - p
        if d == 0:
            return 0
        if abs(d) <= self.err:
            return 0
        return 1 if d > 0 else -1

    @property
    def current_in_flat(self) -> bool:
        with working(self.prec):
            return self.map.flat_spot.contains(self.x)


def _compare_rational(fr: Fraction, target: ContinuedFraction) -> int:
    # the target lies strictly between its two deepest known convergents
    a, b = target.convergent(target.depth - 1), target.convergent(target.depth)
    lo, hi = min(a, b), max(a, b)
    if fr <= lo:
        return -1
    if fr >= hi:
        return 1
    return 0


def compare_rotation(m: FlatSpotMap, target: ContinuedFraction, max_iters: int = DEFAULT_MAX_ITERS,
                     precision: int = DEFAULT_PRECISION):
    """Decide ``rho(m)`` against an irrational target given by its convergents.

    Returns ``(sign, level)``: ``sign`` is -1 or +1 when decided at convergent
    ``level``; ``(0, level)`` means the orbit follows the target's
    combinatorics through the deepest convergent the budget allows, so
    ``rho`` lies between convergents ``level - 1`` and ``level``.
    """
    walker = CriticalWalker(m, precision)
    g_hi = None
    last = 0
    for n in range(1, target.depth + 1):
        q, p = target.q(n), target.p(n)
        if q > max_iters:
            break
        walker.advance_to(q)
        if walker.absorbed_at is not None:
            return _compare_rational(_absorbed_rotation(m, walker, precision).fraction, target), n
        s = walker.sign_against(p)
        # odd convergents of a number in (0,1) lie above it, even ones below
        above = n % 2 == 1
        if above and s > 0:
            return 1, n
        if not above and s < 0:
            return -1, n
        last = n
    return 0, last


# ---------------------------------------------------------------------------
# rotation number
# ---------------------------------------------------------------------------


def rotation_number(m: FlatSpotMap, tol, max_iters: int = DEFAULT_MAX_ITERS,
                    precision: int = DEFAULT_PRECISION) -> RotationNumber:
    """Rational by absorption of the critical orbit in U, else an enclosure.

    After ``N`` steps ``f^N(c) - c`` lies in ``[k, k+1)`` for an integer
    ``k``, which pins ``rho`` to ``[k/N, (k+1)/N]``.  Intersecting these
    over every ``N`` gives a width of order ``1/(q_n q_{n+1})`` once the
    orbit has passed the closest return ``q_{n+1}``.
    """
    _require(m)
    tol = mpf(tol)
    walker = CriticalWalker(m, precision)
    if walker.absorbed_at == 1:
        return _absorbed_rotation(m, walker, precision)
    # bounds as integer pairs lo_n/lo_d and hi_n/hi_d, compared by cross-multiplication
    lo_n, lo_d, hi_n, hi_d = -(1 << 62), 1, 1 << 62, 1
    c = walker.c
    shift = walker.shift
    block = 256
    with working(precision):
        while True:
            n = min(block, max_iters - walker.steps)
            for N, w, x, err in walker.trace(n):
                k = w + shift * N
                # floor(w + x - c) is w or w - 1; an error bound straddling c leaves both
                d = x - c
                k_hi = k if d + err >= 0 else k - 1
                k_lo = k - 1 if d - err < 0 else k
                if k_lo * lo_d > lo_n * N:
                    lo_n, lo_d = k_lo, N
                if (k_hi + 1) * hi_d < hi_n * N:
                    hi_n, hi_d = k_hi + 1, N
            if walker.absorbed_at is not None:
                return _absorbed_rotation(m, walker, precision)
            lo, hi = mpf(lo_n) / lo_d, mpf(hi_n) / hi_d
            if hi - lo <= tol:
                return RotationNumber.enclosure(lo, hi)
            if walker.steps >= max_iters:
                raise BudgetExceeded(f"enclosure width {mpmath.nstr(hi - lo, 3)} > tol after {walker.steps} iterations")
            block = min(block * 2, 1 << 16)


def _absorbed_rotation(m: FlatSpotMap, walker: CriticalWalker, precision: int) -> RotationNumber:
    i = walker.absorbed_at
    w = CriticalWalker(m, precision)
    # point i lies in U, so F^i maps the critical value back to itself
    w.advance_to(i)
    with working(precision):
        p = int(mpmath.nint(w.displacement))
    return RotationNumber.rational(p, i, witness=i)


# ---------------------------------------------------------------------------
# closest returns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosestReturn:
    n: int
    q: int
    y: mpf
    side: str


def closest_returns(orbit: CriticalOrbit, cf: ContinuedFraction, n_max: int | None = None,
                    n_min: int = 1) -> list:
    """``(n, q_n, y_n)`` with ``y_n = dist(U, q_n)`` for ``n_min <= n <= n_max``."""
    if n_max is None:
        n_max = cf.level_for(orbit.length)
    if cf.q(n_max) > orbit.length:
        raise OrbitTooShort(f"q_{n_max} = {cf.q(n_max)} exceeds orbit length {orbit.length}")
    out = []
    for n in range(n_min, n_max + 1):
        q = cf.q(n)
        out.append(ClosestReturn(n, q, orbit.dist_to_flat(q), orbit.side(q)))
    return out


def check_closest_returns(returns: list) -> dict:
    """Strict decrease of y_n and alternation of sides."""
    decreasing = all(b.y < a.y for a, b in zip(returns, returns[1:]))
    alternating = all(a.side != b.side for a, b in zip(returns, returns[1:]))
    return {"decreasing": decreasing, "alternating": alternating}


# ---------------------------------------------------------------------------
# parameter search
# ---------------------------------------------------------------------------


@dataclass
class ParameterResult:
    t: mpf
    lo: mpf
    hi: mpf
    steps: int
    stopped_by: str
    level: int
    rho_error: mpf | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def width(self):
        return self.hi - self.lo


def _rational_sign(m: FlatSpotMap, fr: Fraction, precision: int) -> int:
    walker = CriticalWalker(m, precision)
    walker.advance_to(fr.denominator - 1)
    if walker.absorbed_at is not None:
        # an earlier return to U fixes a rational rotation number with a smaller denominator
        rho = _absorbed_rotation(m, walker, precision).fraction
        return (rho > fr) - (rho < fr)
    if walker.current_in_flat:
        return 0
    walker.advance(1)
    return walker.sign_against(fr.numerator)


def find_parameter(family: FlatSpotMap, target, tol_t, *, lo=0, hi=1,
                   max_iters: int = DEFAULT_MAX_ITERS, precision: int = DEFAULT_PRECISION,
                   budget_stop: bool = False, checkpoint=None, state=None) -> ParameterResult:
    """Bisection in ``t`` for the parameter with rotation number ``target``.

    ``family`` is any validated map; its translates ``family.with_t(t)``
    form the monotone family.  ``target`` is a ContinuedFraction (irrational
    target, compared through its convergents) or a Fraction / rational
    RotationNumber (stops at the first ``t`` inside the locking plateau).

    If a comparison cannot be decided within ``max_iters`` iterations the
    search raises BudgetExceeded, or with ``budget_stop`` returns that
    undecided parameter, whose orbit shadows the target combinatorics for
    the whole budget.  ``checkpoint(state_dict)`` is called after every step
    and ``state`` resumes from such a dict.
    """
    _require(family)
    tol_t = mpf(tol_t)
    if isinstance(target, RotationNumber):
        if not target.is_rational:
            raise ValueError("pass irrational targets as a ContinuedFraction")
        target = target.fraction
    with working(precision):
        lo, hi = mpf(lo), mpf(hi)
        steps = 0
        if state:
            lo, hi, steps = mpf(state["lo"]), mpf(state["hi"]), int(state["steps"])
        width0 = hi - lo
        history = []
        if isinstance(target, Fraction):
            while True:
                mid = (lo + hi) / 2
                s = _rational_sign(family.with_t(mid), target, precision)
                steps += 1
                history.append((mid, s))
                if s == 0:
                    return ParameterResult(mid, lo, hi, steps, "plateau", 0, mpf(0), history)
                if s < 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= tol_t:
                    raise BudgetExceeded("bracket shrank below tol_t without meeting the plateau")

        s_lo, _ = compare_rotation(family.with_t(lo), target, max_iters, precision)
        s_hi, _ = compare_rotation(family.with_t(hi), target, max_iters, precision)
        if not (s_lo < 0 < s_hi):
            raise NonMonotone(f"target not bracketed: sign {s_lo} at t={mpmath.nstr(lo, 8)}, {s_hi} at t={mpmath.nstr(hi, 8)}")
        level = 0
        stopped = "tolerance"
        while hi - lo > tol_t:
            mid = (lo + hi) / 2
            s, level = compare_rotation(family.with_t(mid), target, max_iters, precision)
            steps += 1
            history.append((mid, s))
            if s < 0:
                lo = mid
            elif s > 0:
                hi = mid
            else:
                if not budget_stop:
                    raise BudgetExceeded(
                        f"rotation number undecided within {max_iters} iterations at width {mpmath.nstr(hi - lo, 3)}")
                stopped = "budget"
                t = mid
                break
            if checkpoint is not None:
                checkpoint({"lo": mpmath.nstr(lo, precision), "hi": mpmath.nstr(hi, precision), "steps": steps})
        else:
            t = (lo + hi) / 2
        s, level = compare_rotation(family.with_t(t), target, max_iters, precision)
        rho_err = None
        if s == 0 and level >= 1:
            rho_err = mpf(1) / (target.q(level) * target.q(level - 1))
        if width0 > 0 and steps > math.ceil(math.log2(width0 / tol_t)) + 2:
            raise NonMonotone("bisection took more steps than its width allows")
        return ParameterResult(t, lo, hi, steps, stopped, level, rho_err, history)


def monotonicity_audit(family: FlatSpotMap, grid: int = 100, tol=mpf("1e-3"), lo=0, hi=1,
                       precision: int = DEFAULT_PRECISION) -> list:
    """Rotation-number enclosures on a grid of ``t``; raises NonMonotone on a violation."""
    out = []
    for i in range(grid):
        t = mpf(lo) + (mpf(hi) - mpf(lo)) * i / grid
        rho = rotation_number(family.with_t(t), tol, precision=precision)
        lo_i = rho.value - rho.error
        hi_i = rho.value + rho.error
        if out and hi_i < out[-1][1] - out[-1][2]:
            raise NonMonotone(f"rotation number decreases near t={mpmath.nstr(t, 8)}")
        out.append((t, rho.value, rho.error))
    return out


# ---------------------------------------------------------------------------
# locking intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LockingInterval:
    n: int
    fraction: Fraction
    t_left: mpf
    t_right: mpf
    error: mpf

    @property
    def width(self):
        return self.t_right - self.t_left


def locking_interval(family: FlatSpotMap, n: int, cf: ContinuedFraction, tol_t, *,
                     lo=0, hi=1, precision: int = DEFAULT_PRECISION, max_steps: int = 4000) -> LockingInterval:
    """The parameter interval on which ``rho = p_n/q_n``.

    The predicate is exact: inside the plateau the point ``q_n`` of the
    critical orbit lies in U; outside, the sign of ``f^{q_n}(c) - p_n - c``
    says on which side of the plateau ``t`` is.
    """
    _require(family)
    fr = cf.convergent(n)
    tol_t = mpf(tol_t)
    with working(precision):
        lo, hi = mpf(lo), mpf(hi)
        sign = lambda t: _rational_sign(family.with_t(t), fr, precision)
        inside = None
        for _ in range(max_steps):
            mid = (lo + hi) / 2
            s = sign(mid)
            if s == 0:
                inside = mid
                break
            if s < 0:
                lo = mid
            else:
                hi = mid
        if inside is None:
            raise BudgetExceeded(f"no parameter with rotation number {fr} found")
        a, b = lo, inside
        while b - a > tol_t:
            mid = (a + b) / 2
            if sign(mid) < 0:
                a = mid
            else:
                b = mid
        t_left = (a + b) / 2
        a, b = inside, hi
        while b - a > tol_t:
            mid = (a + b) / 2
            if sign(mid) > 0:
                b = mid
            else:
                a = mid
        t_right = (a + b) / 2
    return LockingInterval(n, fr, t_left, t_right, tol_t)
