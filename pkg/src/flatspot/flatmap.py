"""Circle endomorphisms with a flat spot.

A map is represented by its lift ``f`` on the real line.  On one period
``[left, left + 1)`` the lift is ``t + branch(y)`` where ``branch`` vanishes
on the flat spot ``U = [left, left + |U|]`` and climbs from 0 to 1 on the
rest of the period.  Three families are provided:

``canonical(b, t, nu)``
    ``U = [0, b]`` and ``branch(y) = B((y - b)/(1 - b))`` with the bridge
    ``B(u) = u**nu / (u**nu + (1 - u)**nu)``.  Exact exponent ``nu`` on both
    sides of ``U``.
``polynomial(b, t)``
    A polynomial formula with cubic flatness, evaluated literally on the
    branch ``(1, 2 - b)`` with ``U = [1 - b, 1]``.  ``validate`` decides
    whether it is usable.
``rigid(t)``
    Rotation ``x -> x + t`` with a degenerate one-point "flat spot" at 0.
    Used as a control case.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np
from mpmath import mpf
from scipy import stats

from . import kernel
from .bigreal import DEFAULT_CEILING, DEFAULT_PRECISION, MIN_PRECISION, exact, exact_frac, from_raw, parse_decimal, to_raw, working
from .circle import Arc, frac
from .errors import ConfigError, FlatSpotDomain, PrecisionExhausted, UnvalidatedMap

FAMILIES = ("canonical", "polynomial", "rigid")

ORBIT_BLOCK = 10_000
ERROR_FRACTION = mpf("1e-3")


@dataclass(frozen=True, kw_only=True)
class FlatSpotMap:
    family: str = "abstract"
    b: mpf
    t: mpf
    nu: mpf
    left: mpf = mpf(0)
    _validated: bool = field(default=False, repr=False, compare=False)

    # -- geometry of U -------------------------------------------------
    @property
    def right(self):
        return self.left + self.b

    @property
    def flat_spot(self) -> Arc:
        return Arc(frac(self.left), frac(self.right))

    @property
    def critical_value(self):
        """The circle point F(U), written 1 with an underline in the literature."""
        return frac(self.t)

    @property
    def validated(self) -> bool:
        return self._validated

    def mark_validated(self) -> "FlatSpotMap":
        return replace(self, _validated=True)

    def with_t(self, t) -> "FlatSpotMap":
        """Same map translated in the range; keeps the validation verdict."""
        return replace(self, t=exact(t))

    # -- branch on one period (overridden per family) ------------------
    def branch(self, y):
        raise NotImplementedError

    def branch_d(self, y):
        return mpmath.diff(self.branch, y)

    def branch_d2(self, y):
        return mpmath.diff(self.branch, y, 2)

    def _reduce(self, x):
        k = mpmath.floor(x - self.left)
        return k, x - k

    def in_flat(self, y) -> bool:
        return y <= self.right

    # -- raw lift, no validation guard ---------------------------------
    def lift(self, x):
        k, y = self._reduce(mpf(x))
        if self.in_flat(y):
            return k + self.t
        return k + self.t + self.branch(y)

    def lift_d(self, x):
        _, y = self._reduce(mpf(x))
        if self.in_flat(y):
            return mpf(0)
        return self.branch_d(y)

    def lift_d2(self, x):
        _, y = self._reduce(mpf(x))
        if self.in_flat(y):
            return mpf(0)
        return self.branch_d2(y)

    def circle(self, x):
        """F on circle coordinates."""
        return frac(self.lift(x))

    def inverse(self, y):
        """The unique point off the closed flat spot mapped onto circle point ``y``.

        Bisection on the monotone branch; families with an explicit inverse
        override this.
        """
        v = frac(mpf(y) - self.t)
        if v == 0:
            raise FlatSpotDomain("the critical value has the whole flat spot as preimage")
        lo, hi = self.right, self.left + 1
        target = v
        for _ in range(mpmath.mp.prec + 8):
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                break
            if self.branch(mid) < target:
                lo = mid
            else:
                hi = mid
        return frac((lo + hi) / 2)

    def kernel_spec(self):
        """Tuple understood by the orbit kernel, or None for Python-only families."""
        return None


@dataclass(frozen=True, kw_only=True)
class CanonicalMap(FlatSpotMap):
    family: str = "canonical"

    @property
    def span(self):
        return 1 - self.b

    def _uw(self, y):
        return (y - self.right) / self.span, (self.left + 1 - y) / self.span

    def _pq(self, u, w):
        nu = self.nu
        if nu == int(nu):
            nu = int(nu)
        return u**nu, w**nu

    def branch(self, y):
        u, w = self._uw(y)
        p, q = self._pq(u, w)
        return p / (p + q)

    def branch_d(self, y):
        u, w = self._uw(y)
        p, q = self._pq(u, w)
        s = p + q
        return self.nu * p * q / (u * w * s * s) / self.span

    def branch_nonlinearity(self, y):
        u, w = self._uw(y)
        p, q = self._pq(u, w)
        nu = self.nu
        nb = (nu - 1) / u - (nu - 1) / w - 2 * nu * (p / u - q / w) / (p + q)
        return nb / self.span

    def branch_d2(self, y):
        return self.branch_nonlinearity(y) * self.branch_d(y)

    def inverse(self, y):
        v = frac(mpf(y) - self.t)
        if v == 0:
            raise FlatSpotDomain("the critical value has the whole flat spot as preimage")
        z = (v / (1 - v)) ** (1 / self.nu)
        return frac(self.right + self.span * z / (1 + z))

    def kernel_spec(self):
        if self.left != 0:
            return None
        return (kernel.KIND_CANONICAL, to_raw(self.b), to_raw(exact_frac(self.t)), to_raw(self.nu))


@dataclass(frozen=True, kw_only=True)
class PolynomialMap(FlatSpotMap):
    family: str = "polynomial"

    def branch(self, y):
        b = self.b
        s = (y - 1) / b
        w = (y + b - 1) / b
        return s**3 * (1 - 3 * w + 6 * w**2 - 10 * w**3 + (y - 1) ** 3)


@dataclass(frozen=True, kw_only=True)
class RigidMap(FlatSpotMap):
    family: str = "rigid"

    def in_flat(self, y) -> bool:
        return y == self.left

    def branch(self, y):
        return y - self.left

    def branch_d(self, y):
        return mpf(1)

    def branch_d2(self, y):
        return mpf(0)

    def inverse(self, y):
        return frac(mpf(y) - self.t)

    def kernel_spec(self):
        return (kernel.KIND_RIGID, (0, 0), to_raw(exact_frac(self.t)), (1, 0))


@dataclass(frozen=True, kw_only=True)
class CustomMap(FlatSpotMap):
    """Any user-supplied branch; derivatives by numerical differentiation."""

    family: str = "custom"
    func: Callable | None = field(default=None, compare=False)

    def branch(self, y):
        return self.func(y)


def canonical(b, t, nu) -> CanonicalMap:
    return CanonicalMap(b=exact(b), t=exact(t), nu=exact(nu), left=mpf(0))


def polynomial(b, t) -> PolynomialMap:
    b = exact(b)
    with working(max(mpmath.mp.prec, MIN_PRECISION, b._mpf_[1].bit_length() + 2)):
        left = 1 - b
    return PolynomialMap(b=b, t=exact(t), nu=mpf(3), left=left)


def rigid(t) -> RigidMap:
    return RigidMap(b=mpf(0), t=exact(t), nu=mpf(1), left=mpf(0))


def make_map(family: str, b=None, t=0, nu=None) -> FlatSpotMap:
    if family == "canonical":
        return canonical(b, t, nu)
    if family == "polynomial":
        return polynomial(b, t)
    if family == "rigid":
        return rigid(t)
    raise ConfigError(f"unknown map family {family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class MapConfig:
    family: str
    b: str | None
    t: str
    nu: str | None
    precision_bits: int = DEFAULT_PRECISION
    precision_ceiling_bits: int = DEFAULT_CEILING

    def build(self, t=None) -> FlatSpotMap:
        with working(self.precision_bits):
            b = parse_decimal(self.b, self.precision_bits) if self.b is not None else None
            nu = parse_decimal(self.nu, self.precision_bits) if self.nu is not None else None
            tt = parse_decimal(self.t, self.precision_bits) if t is None else exact(t)
            return make_map(self.family, b, tt, nu)


def map_config(doc: dict) -> MapConfig:
    """Parse the JSON map document; numbers must be decimal strings."""
    if "family" not in doc:
        raise ConfigError("map config needs a 'family'")
    family = doc["family"]
    if family not in FAMILIES:
        raise ConfigError(f"unknown map family {family!r}")
    for key in ("b", "t", "nu"):
        if key in doc and not isinstance(doc[key], str):
            raise ConfigError(f"{key!r} must be a decimal string, got {type(doc[key]).__name__}")
    if family != "rigid" and "b" not in doc:
        raise ConfigError(f"family {family!r} needs 'b'")
    if family == "canonical" and "nu" not in doc:
        raise ConfigError("family 'canonical' needs 'nu'")
    prec = int(doc.get("precision_bits", DEFAULT_PRECISION))
    ceiling = int(doc.get("precision_ceiling_bits", max(DEFAULT_CEILING, prec)))
    if prec < 64 or ceiling < prec:
        raise ConfigError("need 64 <= precision_bits <= precision_ceiling_bits")
    cfg = MapConfig(family, doc.get("b"), doc.get("t", "0"), doc.get("nu"), prec, ceiling)
    try:
        m = cfg.build()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if family != "rigid" and not (0 < m.b < 1):
        raise ConfigError("flat spot length b must lie in (0, 1)")
    if family == "canonical" and not m.nu > 0:
        raise ConfigError("exponent nu must be positive")
    return cfg


# ---------------------------------------------------------------------------
# guarded evaluation
# ---------------------------------------------------------------------------


def _require(m: FlatSpotMap) -> None:
    if not m.validated:
        raise UnvalidatedMap(f"{m.family} map has not passed validate()")


def eval(m: FlatSpotMap, x):  # noqa: A001 - mirrors the operation name
    """f(x) for a validated map; constant on the closure of U."""
    _require(m)
    return m.lift(x)


def deriv(m: FlatSpotMap, x):
    _require(m)
    return m.lift_d(x)


def nonlinearity(m: FlatSpotMap, x):
    """D2f/Df; undefined on the closed flat spot."""
    _require(m)
    _, y = m._reduce(mpf(x))
    if m.in_flat(y):
        raise FlatSpotDomain(f"nonlinearity undefined on the flat spot (x={mpmath.nstr(x, 8)})")
    if isinstance(m, CanonicalMap):
        return m.branch_nonlinearity(y)
    return m.branch_d2(y) / m.branch_d(y)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ExponentFit:
    estimate: float
    halfwidth: float
    points: int

    def __str__(self) -> str:
        return f"{self.estimate:.4f} ± {self.halfwidth:.4f}"


@dataclass
class ValidationReport:
    family: str
    usable: bool
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    exponent_right: ExponentFit | None = None
    exponent_left: ExponentFit | None = None

    def as_dict(self) -> dict:
        fit = lambda e: None if e is None else {"estimate": e.estimate, "halfwidth": e.halfwidth}
        return {
            "family": self.family,
            "usable": self.usable,
            "checks": dict(self.checks),
            "failures": list(self.failures),
            "exponent_right": fit(self.exponent_right),
            "exponent_left": fit(self.exponent_left),
        }


def _exponent_fit(m: FlatSpotMap, side: str) -> ExponentFit | None:
    prec = mpmath.mp.prec
    ks = range(10, max(prec // 4, 16) + 1)
    xs, ys = [], []
    for k in ks:
        h = mpmath.ldexp(1, -k)
        x = m.right + h if side == "right" else m.left + 1 - h
        d = m.lift_d(x)
        if not d > 0:
            return None
        xs.append(float(mpmath.log(h)))
        ys.append(float(mpmath.log(d)))
    fit = stats.linregress(xs, ys)
    tq = stats.t.ppf(0.975, len(xs) - 2)
    return ExponentFit(fit.slope + 1.0, float(tq * fit.stderr), len(xs))


def validate(m: FlatSpotMap, grid: int = 2048, exponent_tol: float = 0.05, seed: int = 0,
             precision: int = DEFAULT_PRECISION) -> ValidationReport:
    """Check the defining properties of the map class on a dense grid.

    On success the report is usable and ``m.mark_validated()`` gives the map
    that the guarded operations accept (see :func:`validated`).
    """
    with working(precision):
        return _validate(m, grid, exponent_tol, seed)


def _validate(m: FlatSpotMap, grid: int, exponent_tol: float, seed: int) -> ValidationReport:
    report = ValidationReport(family=m.family, usable=True)
    rng = random.Random(seed)

    def fail(name: str, message: str) -> None:
        report.checks[name] = False
        report.failures.append(message)
        report.usable = False

    tol = mpmath.ldexp(1, -(mpmath.mp.prec // 2))
    worst = max(abs(m.lift(x + 1) - m.lift(x) - 1) for x in (mpf(rng.random()) * 3 - 1 for _ in range(200)))
    if worst < tol:
        report.checks["degree_one"] = True
    else:
        fail("degree_one", f"degree one violated: |f(x+1)-f(x)-1| = {mpmath.nstr(worst, 5)}")

    # one period, sampled uniformly plus geometric refinement at both ends of U
    lo = m.left
    xs = [lo + mpf(i) / grid for i in range(grid + 1)]
    for k in range(4, 40, 2):
        h = mpmath.ldexp(1, -k)
        xs += [m.right + h, m.right - h, m.left + 1 - h, m.left + h]
    xs = sorted(set(xs))
    vals = [m.lift(x) for x in xs]
    bad = next((i for i in range(1, len(xs)) if vals[i] < vals[i - 1]), None)
    if bad is None:
        report.checks["monotone"] = True
    else:
        fail("monotone", f"monotonicity violated at x={mpmath.nstr(xs[bad], 10)}")

    # continuity: the branch must leave U at the flat value and reach it +1 at the period end
    edge = [abs(m.lift(m.right + mpmath.ldexp(1, -k)) - m.t) for k in (20, 40)]
    end = [abs(m.lift(m.left + 1 - mpmath.ldexp(1, -k)) - (m.t + 1)) for k in (20, 40)]
    if m.b == 0 or (edge[1] <= edge[0] and edge[1] < 1e-4 and end[1] <= end[0] and end[1] < 1e-4):
        report.checks["continuous"] = True
    else:
        fail("continuous", f"discontinuous at the ends of the branch (jumps {mpmath.nstr(edge[1], 4)}, {mpmath.nstr(end[1], 4)})")

    # flat exactly on the closure of U
    if m.b > 0:
        inside = [m.lift(m.left + m.b * mpf(i) / 64) for i in range(65)]
        h = mpmath.ldexp(1, -30)
        flat_ok = all(v == m.t for v in inside)
        flat_ok = flat_ok and m.lift(m.right + h) != m.t and m.lift(m.left - h) != m.t
        if flat_ok:
            report.checks["flat_on_U"] = True
        else:
            fail("flat_on_U", "map is not constant exactly on the closure of U")

    off = [x for x in xs if not m.flat_spot.contains(frac(x))]
    zero = next((x for x in off if not m.lift_d(x) > 0), None)
    if zero is None:
        report.checks["positive_derivative"] = True
    else:
        fail("positive_derivative", f"Df <= 0 outside U at x={mpmath.nstr(zero, 10)}")

    if m.b > 0 and report.usable:
        report.exponent_right = _exponent_fit(m, "right")
        report.exponent_left = _exponent_fit(m, "left")
        ok = True
        for name, fit in (("right", report.exponent_right), ("left", report.exponent_left)):
            if fit is None or abs(fit.estimate - float(m.nu)) > exponent_tol * float(m.nu):
                ok = False
                fail(f"exponent_{name}", f"local exponent at the {name} edge is {fit} not {mpmath.nstr(m.nu, 6)}")
        if ok:
            report.checks["exponent"] = True
    return report


def validated(m: FlatSpotMap, **kwargs) -> FlatSpotMap:
    """Validate and return the map marked usable; raises on rejection."""
    from .errors import ValidationRejected

    report = validate(m, **kwargs)
    if not report.usable:
        raise ValidationRejected(f"{m.family} map rejected: " + "; ".join(report.failures), report)
    return m.mark_validated()


# ---------------------------------------------------------------------------
# critical orbit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalOrbit:
    """Forward orbit of the flat spot.

    ``points[0]`` is the arc U itself; ``points[i]`` for ``i >= 1`` is the
    circle coordinate of ``F^i(U)``.  ``windings[i]`` is the integer part of
    the lift, so ``lift(i) = windings[i] + points[i]``.
    """

    map: FlatSpotMap
    points: tuple
    windings: tuple
    error_bound: tuple
    precision: int
    absorbed_at: int | None = None
    rotation: Fraction | None = None

    @property
    def length(self) -> int:
        return len(self.points) - 1

    def __len__(self) -> int:
        return self.length

    def require(self, index: int) -> None:
        from .errors import OrbitTooShort

        if index > self.length:
            raise OrbitTooShort(f"orbit has {self.length} points, index {index} requested")

    def point(self, i: int):
        self.require(i)
        return self.points[i]

    def lift(self, i: int):
        self.require(i)
        return self.windings[i] + self.points[i]

    def dist_to_flat(self, i: int):
        """dist(i, U); index 0 stands for U itself."""
        if i == 0:
            return mpf(0)
        with working(self.precision):
            return self.map.flat_spot.distance(self.point(i))

    def side(self, i: int) -> str:
        with working(self.precision):
            return self.map.flat_spot.side(self.point(i))

    def arc(self, i: int, j: int):
        """Length of the shortest arc between two orbit elements (0 means U)."""
        from .circle import arc_length

        if i == 0:
            return self.dist_to_flat(j)
        if j == 0:
            return self.dist_to_flat(i)
        with working(self.precision):
            return arc_length(self.point(i), self.point(j))

    def error(self, i: int) -> float:
        return 0.0 if i == 0 else self.error_bound[i]


def _python_block(m: FlatSpotMap, x, n: int, prec: int, err: float):
    """Generic orbit block for families without kernel support."""
    pts, winds, errs = [], [], []
    absorbed = -1
    step_err = 8.0 * 2.0 ** (-prec)
    with working(prec):
        y = +x
        for j in range(n):
            if m.flat_spot.contains(y) and absorbed < 0:
                absorbed = j
            d = float(m.lift_d(y)) if not m.flat_spot.contains(y) else 0.0
            v = m.lift(y)
            k = int(mpmath.floor(v))
            y = v - k
            err = err * d + step_err
            pts.append(y)
            winds.append(k)
            errs.append(err)
    return pts, winds, errs, absorbed


def _orbit_once(m: FlatSpotMap, N: int, prec: int, ceiling_check):
    spec = m.kernel_spec()
    points = [m.flat_spot]
    windings = [0]
    errors = [0.0]
    with working(prec):
        x = +frac(m.t)
        w0 = int(mpmath.floor(m.t))
    points.append(x)
    windings.append(w0)
    errors.append(8.0 * 2.0 ** (-prec))
    absorbed = None
    with working(prec):
        if m.flat_spot.contains(x):
            absorbed = 1
    min_dist = None
    remaining = N - 1
    while remaining > 0 and absorbed is None:
        n = min(ORBIT_BLOCK, remaining)
        if spec is not None:
            raw, winds, errs, hit = kernel.trajectory(spec, to_raw(points[-1]), n, prec, errors[-1])
            pts = [from_raw(*r) for r in raw]
        else:
            pts, winds, errs, hit = _python_block(m, points[-1], n, prec, errors[-1])
        base = len(points) - 1
        w = windings[-1]
        for p, k, e in zip(pts, winds, errs):
            w += k
            points.append(p)
            windings.append(w)
            errors.append(e)
        # the kernel reports the offset of the first input-or-image point in U
        with working(prec):
            inside = [i for i in range(base + 1, len(points)) if m.flat_spot.contains(points[i])]
        if inside:
            absorbed = inside[0]
            del points[absorbed + 1 :], windings[absorbed + 1 :], errors[absorbed + 1 :]
        with working(prec):
            block_min = min((m.flat_spot.distance(p) for p in points[base + 1 :] if not m.flat_spot.contains(p)), default=None)
        if block_min is not None:
            min_dist = block_min if min_dist is None else min(min_dist, block_min)
        if ceiling_check(max(errors[base + 1 :]), min_dist):
            return None
        remaining -= n
    return points, windings, errors, absorbed


def critical_orbit(
    m: FlatSpotMap,
    N: int,
    precision: int = DEFAULT_PRECISION,
    ceiling: int = DEFAULT_CEILING,
    tolerance=None,
) -> CriticalOrbit:
    """Points 1..N of the orbit of U with per-point error estimates.

    Precision policy: start at ``precision``; after every block of
    ``ORBIT_BLOCK`` iterations compare the propagated error with
    ``tolerance`` (default: 1e-3 times the smallest distance to U seen so far)
    and restart the whole orbit at doubled precision when it is exceeded.
    If the orbit falls into U it is truncated there and the rational rotation
    number is recorded.
    """
    _require(m)
    if N < 1:
        raise ValueError("N must be at least 1")
    prec = precision
    while True:

        def too_big(err, min_dist):
            limit = tolerance if tolerance is not None else (ERROR_FRACTION * min_dist if min_dist else None)
            return limit is not None and err > limit

        out = _orbit_once(m, N, prec, too_big)
        if out is not None:
            break
        prec *= 2
        if prec > ceiling:
            raise PrecisionExhausted(f"orbit error bound exceeds tolerance at ceiling precision {ceiling} bits")
    points, windings, errors, absorbed = out
    rotation = None
    if absorbed is not None:
        # i in U  =>  F^i(U) in U, so the critical value has period i
        with working(prec):
            v = m.lift(windings[absorbed] + points[absorbed])
        p = int(mpmath.floor(v - m.t + mpf(1) / 2))
        rotation = Fraction(p, absorbed)
    return CriticalOrbit(m, tuple(points), tuple(windings), tuple(errors), prec, absorbed, rotation)


@dataclass(frozen=True)
class BackwardOrbit:
    """Preimage arcs ``arcs[i] = F^{-i}(U)`` with endpoint error estimates."""

    map: FlatSpotMap
    arcs: tuple
    errors: tuple
    precision: int

    @property
    def length(self) -> int:
        return len(self.arcs) - 1

    def arc(self, i: int) -> Arc:
        if i > self.length:
            from .errors import OrbitTooShort

            raise OrbitTooShort(f"backward orbit has {self.length} preimages, index {i} requested")
        return self.arcs[i]


def backward_orbit(m: FlatSpotMap, N: int, precision: int = DEFAULT_PRECISION) -> BackwardOrbit:
    """Preimages ``-i`` of U for ``0 <= i <= N`` through the inverse branch.

    The inverse contracts where the map expands, so the error of an endpoint
    grows by ``1/Df`` at its new position plus a rounding term.
    """
    _require(m)
    step = 8.0 * 2.0 ** (-precision)
    with working(precision):
        arcs = [m.flat_spot]
        errors = [0.0]
        lo, hi = m.flat_spot
        err = 0.0
        for _ in range(N):
            lo, hi = m.inverse(lo), m.inverse(hi)
            d = min(float(m.lift_d(lo)), float(m.lift_d(hi)))
            err = (err / d if d > 0 else math.inf) + step
            arcs.append(Arc(lo, hi))
            errors.append(err)
    return BackwardOrbit(m, tuple(arcs), tuple(errors), precision)
