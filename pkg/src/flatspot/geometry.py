"""Backward-orbit partitions, hole statistics and cross-ratio diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mpf
from scipy import stats

from .bigreal import DEFAULT_PRECISION, to_decimal, working
from .circle import Arc, arc_length, frac, oriented
from .errors import (
    ChainInvalid,
    DegenerateQuadruple,
    FlatSpotHit,
    InconclusiveWindow,
    OrderingViolation,
    SideCaseUndetermined,
)
from .flatmap import BackwardOrbit, CriticalOrbit, FlatSpotMap, _require, backward_orbit
from .rotation import ContinuedFraction

# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hole:
    kind: str  # "box" or "circ"
    index: int
    arc: Arc

    @property
    def length(self):
        return self.arc.length


@dataclass(frozen=True)
class Partition:
    n: int
    case: str  # side of U on which -q_n lies
    preimages: tuple
    boxes: tuple
    circs: tuple
    error: float
    precision: int = DEFAULT_PRECISION

    @property
    def holes(self) -> tuple:
        return self.boxes + self.circs

    def hole_lengths(self) -> list:
        with working(self.precision):
            return [h.length for h in self.holes]

    def total_hole_length(self):
        with working(self.precision):
            return mpmath.fsum(self.hole_lengths())

    def total_length(self):
        with working(self.precision):
            return mpmath.fsum(a.length for a in self.preimages) + self.total_hole_length()

    def S(self, alpha):
        """Hausdorff sum of the holes at exponent ``alpha``."""
        with working(self.precision):
            alpha = mpf(alpha)
            if alpha == 0:
                return mpf(len(self.holes))
            return mpmath.fsum(h ** alpha for h in self.hole_lengths())

    def box(self, i: int) -> Hole:
        return self.boxes[i]

    def circ(self, j: int) -> Hole:
        return self.circs[j]

    def rows(self):
        for i, a in enumerate(self.preimages):
            yield "preimage", i, a
        for h in self.holes:
            yield h.kind, h.index, h.arc


def build_partition(m: FlatSpotMap, cf: ContinuedFraction, n: int,
                    backward: BackwardOrbit | None = None, precision: int = DEFAULT_PRECISION) -> Partition:
    """The n-th partition: preimages ``-i`` for ``0 <= i < q_{n+1} + q_n`` and the holes between them.

    The two neighbours of U among the preimages must be ``-q_n`` and
    ``-q_{n+1}``; which side ``-q_n`` is on selects the labelling of boxes
    and circles.
    """
    _require(m)
    qn, qn1 = cf.q(n), cf.q(n + 1)
    count = qn + qn1
    if backward is None or backward.length < count - 1:
        backward = backward_orbit(m, count - 1, precision)
    with working(backward.precision):
        pre = [backward.arc(i) for i in range(count)]
        err = max(backward.errors[:count])
        order = sorted(range(count), key=lambda i: frac(pre[i].left - pre[0].left))
        left_nb, right_nb = order[-1], order[1]
        if {left_nb, right_nb} != {qn, qn1}:
            raise SideCaseUndetermined(
                f"neighbours of U at level {n} are -{left_nb} and -{right_nb}, expected -{qn} and -{qn1}")
        case = "left" if left_nb == qn else "right"

        gaps = {}
        for k, i in enumerate(order):
            j = order[(k + 1) % count]
            g = Arc(pre[i].right, pre[j].left)
            if oriented(pre[i].left, pre[i].right) + oriented(pre[i].right, pre[j].left) > 1 - mpf(err):
                raise SideCaseUndetermined(f"preimages -{i} and -{j} overlap within the error bound")
            gaps[(i, j)] = g

        def take(kind, idx, key):
            if key not in gaps:
                raise SideCaseUndetermined(f"{kind} {idx} at level {n}: preimages -{key[0]}, -{key[1]} are not adjacent")
            return Hole(kind, idx, gaps.pop(key))

        if case == "left":
            boxes = [take("box", i, (qn + i, i)) for i in range(qn1)]
            circs = [take("circ", j, (j, qn1 + j)) for j in range(qn)]
        else:
            boxes = [take("box", i, (i, qn + i)) for i in range(qn1)]
            circs = [take("circ", j, (qn1 + j, j)) for j in range(qn)]
    return Partition(n, case, tuple(pre), tuple(boxes), tuple(circs), err, backward.precision)


def partitions(m: FlatSpotMap, cf: ContinuedFraction, levels, precision: int = DEFAULT_PRECISION) -> list:
    levels = list(levels)
    top = max(levels)
    back = backward_orbit(m, cf.q(top) + cf.q(top + 1) - 1, precision)
    return [build_partition(m, cf, n, back) for n in levels]


def nesting_defect(coarse: Partition, fine: Partition) -> mpf:
    """Largest endpoint mismatch between ``Circ^{n-1}_j`` and ``Box^n_j``."""
    if fine.n != coarse.n + 1:
        raise ValueError("partitions must be at consecutive levels")
    worst = mpf(0)
    with working(fine.precision):
        for j, c in enumerate(coarse.circs):
            b = fine.boxes[j].arc
            worst = max(worst, abs(c.arc.left - b.left), abs(c.arc.right - b.right))
    return worst


def refines(coarse: Partition, fine: Partition) -> bool:
    """Every hole of the finer partition lies inside a hole of the coarser one."""
    arcs = [h.arc for h in coarse.holes]
    tol = mpf(max(coarse.error, fine.error)) * 4
    with working(fine.precision):
        for h in fine.holes:
            mid = frac(h.arc.left + h.length / 2)
            host = next((a for a in arcs if a.contains(mid)), None)
            if host is None:
                return False
            if oriented(host.left, h.arc.left) + h.length > host.length + tol:
                return False
    return True


def subdivision(coarse: Partition, fine: Partition) -> dict:
    """Labels of the level-n holes inside each ``Box^{n-1}_i``, measured by containment."""
    out = {}
    with working(fine.precision):
        for box in coarse.boxes:
            inside = []
            for h in fine.holes:
                mid = frac(h.arc.left + h.length / 2)
                if box.arc.contains(mid):
                    inside.append((h.kind, h.index))
            out[box.index] = sorted(inside)
    return out


def predicted_subdivision(cf: ContinuedFraction, n: int) -> dict:
    """Combinatorial prediction for :func:`subdivision` at fine level ``n``.

    ``Box^{n-1}_i`` splits into ``Circ^n_i`` and ``Box^n_{i + q_{n-1} + j q_n}``
    for ``0 <= j < a_{n+1}``.
    """
    qm, qn = cf.q(n - 1), cf.q(n)
    return {i: sorted([("circ", i)] + [("box", i + qm + j * qn) for j in range(cf.a(n + 1))])
            for i in range(qn)}


# ---------------------------------------------------------------------------
# measure and dimension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeficitFit:
    levels: tuple
    totals: tuple
    rate: float
    rate_low: float
    rate_high: float
    r2: float

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.totals, self.totals[1:]))


def lebesgue_deficit(parts: list) -> DeficitFit:
    """Total hole length per level with a log-linear decay fit.

    ``rate`` is the fitted factor per level (< 1 means exponential decay);
    its 95% interval comes from the slope's t interval.
    """
    levels = tuple(p.n for p in parts)
    totals = tuple(p.total_hole_length() for p in parts)
    x = np.array(levels, dtype=float)
    y = np.array([float(mpmath.log(t)) for t in totals])
    fit = stats.linregress(x, y)
    if len(x) > 2:
        half = stats.t.ppf(0.975, len(x) - 2) * fit.stderr
    else:
        half = float("nan")
    return DeficitFit(levels, totals, float(np.exp(fit.slope)), float(np.exp(fit.slope - half)),
                      float(np.exp(fit.slope + half)), fit.rvalue**2)


@dataclass(frozen=True)
class HausdorffEstimate:
    alpha: float | None
    grid: tuple
    sums: dict  # (level, alpha) -> S
    verdict: str
    caveat: str = "finite-level evidence"


def _monotone(parts, alpha) -> tuple:
    vals = [p.S(alpha) for p in parts]
    return all(b <= a for a, b in zip(vals, vals[1:])), vals


def coarse_grid() -> list:
    return [round(0.5 + 0.05 * k, 3) for k in range(11)]


def hausdorff_upper(parts: list, alpha_grid=None, refine: float = 0.005, raise_inconclusive: bool = True) -> HausdorffEstimate:
    """Smallest grid exponent at which ``S_n(alpha)`` does not increase over the window.

    The coarse grid is refined to steps of ``refine`` below the first
    monotone grid point.  This is evidence from finitely many levels, not a
    bound.
    """
    if len(parts) < 4:
        raise ValueError("need at least four consecutive levels")
    grid = sorted(alpha_grid) if alpha_grid is not None else coarse_grid()
    sums = {}

    def test(alpha):
        ok, vals = _monotone(parts, alpha)
        for p, v in zip(parts, vals):
            sums[(p.n, alpha)] = v
        return ok

    # every grid point is evaluated so the export has the full table
    verdicts = [(a, test(a)) for a in grid]
    first = None
    prev = None
    for a, ok in verdicts:
        if ok:
            first = a
            break
        prev = a
    if first is not None and refine and prev is not None:
        k = 1
        a = round(first - refine, 6)
        best = first
        while a > prev + 1e-12:
            if test(a):
                best = a
            else:
                break
            k += 1
            a = round(first - k * refine, 6)
        first = best
    if first is None or first >= 1:
        if raise_inconclusive:
            raise InconclusiveWindow("no grid exponent below 1 gives non-increasing sums")
        return HausdorffEstimate(None, tuple(grid), sums, "inconclusive")
    return HausdorffEstimate(first, tuple(grid), sums, "upper bound estimate")


def write_partitions(parts: list, path, bits: int = 256) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "kind", "index", "left", "right", "length"])
        for p in parts:
            for kind, idx, arc in p.rows():
                w.writerow([p.n, kind, idx, to_decimal(arc.left, bits), to_decimal(arc.right, bits),
                            to_decimal(arc.length, bits)])


def write_hausdorff(est: HausdorffEstimate, path, bits: int = 256) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "alpha", "S"])
        for (n, a), s in sorted(est.sums.items()):
            w.writerow([n, a, to_decimal(s, bits)])


# ---------------------------------------------------------------------------
# cross-ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadruple:
    a: mpf
    b: mpf
    c: mpf
    d: mpf

    @classmethod
    def ordered(cls, a, b, c, d) -> "Quadruple":
        """Accept the points in either circular orientation."""
        q = cls(*(frac(mpf(v)) for v in (a, b, c, d)))
        if q.positively_ordered():
            return q
        r = cls(q.d, q.c, q.b, q.a)
        if r.positively_ordered():
            return r
        raise DegenerateQuadruple("points are not in circular order")

    def positively_ordered(self) -> bool:
        ab, bc, cd = oriented(self.a, self.b), oriented(self.b, self.c), oriented(self.c, self.d)
        return ab + bc + cd < 1 and (bc > 0 or ab + cd == 0) and self.a != self.d

    def arcs(self):
        """Lengths of (a,b), (c,d), (a,c), (b,d) inside the arc from a to d."""
        ab = oriented(self.a, self.b)
        bc = oriented(self.b, self.c)
        cd = oriented(self.c, self.d)
        if ab + bc + cd >= 1:
            raise DegenerateQuadruple("points are not in circular order")
        return ab, cd, ab + bc, bc + cd

    def image(self, f) -> "Quadruple":
        return Quadruple(*(frac(f(v)) for v in (self.a, self.b, self.c, self.d)))


def cross_ratio(q: Quadruple):
    """``|(a,b)||(c,d)| / (|(a,c)||(b,d)|)`` with arcs taken inside ``(a, d)``."""
    ab, cd, ac, bd = q.arcs()
    if ac == 0 or bd == 0:
        raise DegenerateQuadruple("the quadruple collapses")
    return ab * cd / (ac * bd)


@dataclass(frozen=True)
class DCrProduct:
    product: mpf
    factors: tuple
    multiplicity: int
    quadruples: tuple


def multiplicity(arcs) -> int:
    """Largest number of the open arcs that cover a common point (sweep line)."""
    events = []
    for arc in arcs:
        lo, length = arc.left, arc.length
        if length == 0:
            continue
        hi = lo + length
        events.append((lo, 1))
        events.append((hi, -1))
        if hi > 1:
            events.append((lo - 1, 1))
            events.append((hi - 1, -1))
    # closing before opening keeps open arcs that merely touch apart
    events.sort(key=lambda e: (e[0], e[1]))
    best = cur = 0
    for _, delta in events:
        cur += delta
        best = max(best, cur)
    return best


def dcr_product(m: FlatSpotMap, q: Quadruple, iters: int, precision: int = DEFAULT_PRECISION) -> DCrProduct:
    """Running product of cross-ratio distortions along ``iters`` iterates of ``q``."""
    _require(m)
    U = m.flat_spot
    factors, quads = [], [q]
    with working(precision):
        cur = q
        cr = cross_ratio(cur)
        prod = mpf(1)
        for i in range(iters):
            inner = Arc(cur.b, cur.c)
            if inner.contains(U.left, closed=False) or inner.contains(U.right, closed=False) \
                    or U.contains(cur.b, closed=False) or U.contains(cur.c, closed=False):
                raise FlatSpotHit(f"(b, c) meets U at iterate {i}", i)
            nxt = cur.image(m.lift)
            cr_next = cross_ratio(nxt)
            factors.append(cr_next / cr)
            prod *= factors[-1]
            cur, cr = nxt, cr_next
            quads.append(cur)
        k = multiplicity([Arc(x.a, x.d) for x in quads[:-1]])
    return DCrProduct(prod, tuple(factors), k, tuple(quads))


def decay_experiment(orbit: CriticalOrbit, cf: ContinuedFraction, n: int) -> dict:
    """Cross-ratio distortion for the quadruple used in the exponential decay of Gamma.

    The shortest arc among ``(q_n + i, i)``, ``0 <= i <= q_{n+1}``, is
    located; the quadruple ``{3q_n+1, q_n+1, 1, q_{n+1}-q_n+1}`` is iterated
    so that ``(q_n+1, 1)`` lands on it.
    """
    qn, qn1 = cf.q(n), cf.q(n + 1)
    with working(orbit.precision):
        lengths = [(orbit.arc(qn + i, i), i) for i in range(0, qn1 + 1)]
        shortest, i_min = min(lengths, key=lambda t: t[0])
        gamma = orbit.arc(3 * qn, qn) / orbit.dist_to_flat(qn)
        out = {"n": n, "shortest_index": i_min, "shortest": shortest, "Gamma": gamma}
        if i_min == 0:
            out.update(iterations=0, product=mpf(1), multiplicity=0)
            return out
        pts = [orbit.point(k) for k in (3 * qn + 1, qn + 1, 1, qn1 - qn + 1)]
        q = Quadruple.ordered(*pts)
        res = dcr_product(orbit.map, q, i_min - 1, orbit.precision)
        out.update(iterations=i_min - 1, product=res.product, multiplicity=res.multiplicity,
                   cross_ratio=cross_ratio(res.quadruples[-1]))
    return out


# ---------------------------------------------------------------------------
# power law and distortion
# ---------------------------------------------------------------------------


def power_law_quotient(a, b, z, nu) -> tuple:
    """``r(z) = (b^nu - a^nu)/(b - a) * (z - b)/(z^nu - b^nu)`` and its limit as ``z`` decreases to ``b``."""
    a, b, z, nu = mpf(a), mpf(b), mpf(z), mpf(nu)
    if not (0 < a < b < z):
        raise OrderingViolation("need 0 < a < b < z")
    if nu < 1:
        raise OrderingViolation("need nu >= 1")
    slope = (b**nu - a**nu) / (b - a)
    r = slope * (z - b) / (z**nu - b**nu)
    limit = slope / (nu * b ** (nu - 1))
    return r, limit


def quoted_bound(a, b, z, nu):
    """The right-hand side factor ``(a/b)^(nu-1)`` of the cross-ratio bound, for reporting only."""
    a, b = mpf(a), mpf(b)
    return (a / b) ** (mpf(nu) - 1)


def chain(m: FlatSpotMap, I0: Arc, n: int) -> list:
    """``I_0, ..., I_n`` with ``I_{j+1} = f^{-1}(I_j)``."""
    _require(m)
    out = [I0]
    for _ in range(n):
        lo, hi = out[-1]
        out.append(Arc(m.inverse(lo), m.inverse(hi)))
    return out


@dataclass(frozen=True)
class RescaledNonlinearity:
    sup: mpf
    total_length: mpf
    cross_ratio: mpf
    samples: int


def rescaled_nonlinearity(m: FlatSpotMap, intervals: list, window=None,
                          samples: int = 65, tol=None) -> RescaledNonlinearity:
    """Sup of ``|g''/g'|`` for ``g = f^{-n} o A`` on ``A(window)``.

    With ``F = f^n`` and ``x = g(y)``, ``g''/g' = -|I_0| N_F(x) / F'(x)`` where
    ``N_F = sum_k nf(f^k x) (f^k)'(x)`` is the nonlinearity of the composition.
    """
    _require(m)
    n = len(intervals) - 1
    if n < 1:
        raise ChainInvalid("a chain needs at least two intervals")
    U = m.flat_spot
    tol = tol if tol is not None else mpmath.ldexp(1, -(mpmath.mp.prec // 2))
    for j, I in enumerate(intervals):
        if j < n and (U.contains(I.left) or U.contains(I.right) or I.contains(U.left) or I.contains(U.right)):
            raise ChainInvalid(f"I_{j} meets the flat spot")
        if j > 0:
            prev = intervals[j - 1]
            if arc_length(m.lift(I.left), prev.left) > tol or arc_length(m.lift(I.right), prev.right) > tol:
                raise ChainInvalid(f"I_{j} is not the preimage of I_{j - 1}")
    I0 = intervals[0]
    L0 = I0.length
    # the default middle third is built here so it carries the working precision
    lo_s, hi_s = (mpf(1) / 3, mpf(2) / 3) if window is None else (mpf(window[0]), mpf(window[1]))
    best = mpf(0)
    for k in range(samples):
        s = lo_s + (hi_s - lo_s) * k / (samples - 1)
        y = frac(I0.left + s * L0)
        xs = [y]
        for _ in range(n):
            xs.append(m.inverse(xs[-1]))
        # forward along x = x_n -> x_{n-1} -> ... -> x_0 = y
        N = mpf(0)
        D = mpf(1)
        for j in range(n, 0, -1):
            xj = xs[j]
            N += m.lift_d2(xj) / m.lift_d(xj) * D
            D *= m.lift_d(xj)
        best = max(best, abs(L0 * N / D))
    total = mpmath.fsum(I.length for I in intervals[:n])
    # Cr(0, s1, s2, 1) on the unit interval
    cr = lo_s * (1 - hi_s) / (hi_s * (1 - lo_s))
    return RescaledNonlinearity(best, total, cr, samples)
