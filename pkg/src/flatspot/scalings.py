"""Scaling sequences of the critical orbit and the residuals of the approximate relations.

Conventions used throughout:

* ``y_n = dist(U, q_n)`` with the orbit point ``q_n``; ``y_0`` is the
  distance of the critical value ``1`` (since ``q_0 = 1``), so ``sigma(n)``
  starts at ``n = 2``.
* For an orbit point ``i`` the length ``|i|`` is ``dist(i, U)`` and
  ``|f(i)|`` is ``dist(i + 1, 1)``, the image of that gap.
* Arcs between two orbit points are shortest arcs; index 0 stands for U.

Every series carries a propagated error bound derived from the per-point
error estimates of the orbit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import mpmath
import numpy as np
from mpmath import mpf
from scipy import stats

from .bigreal import mixed_format, sig, to_decimal, working
from .circle import arc_length, frac, oriented
from .errors import NonpositiveScaling, OrbitTooShort, UndefinedAtLevel
from .flatmap import BackwardOrbit, CriticalOrbit
from .rotation import ContinuedFraction

NOISE_FACTOR = 10


# ---------------------------------------------------------------------------
# sigma(n)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaSeries:
    levels: tuple
    q: dict
    y: dict
    y_err: dict
    sigma: dict
    sigma_err: dict
    base: str = "y_0 = dist(U, 1), sigma from n = 2"

    def sigmas(self, n_from: int | None = None, n_to: int | None = None) -> list:
        return [(n, self.sigma[n]) for n in self.levels if n in self.sigma
                and (n_from is None or n >= n_from) and (n_to is None or n <= n_to)]


def _need(orbit: CriticalOrbit, index: int) -> None:
    if index > orbit.length:
        raise OrbitTooShort(f"orbit has {orbit.length} points, index {index} needed")


def sigma_series(orbit: CriticalOrbit, cf: ContinuedFraction, n_max: int | None = None) -> SigmaSeries:
    """``y_n`` for ``0 <= n <= n_max`` and ``sigma(n) = y_n / y_{n-2}`` from ``n = 2``."""
    if n_max is None:
        n_max = cf.level_for(orbit.length)
    _need(orbit, cf.q(n_max))
    q, y, y_err, s, s_err = {}, {}, {}, {}, {}
    with working(orbit.precision):
        for n in range(0, n_max + 1):
            q[n] = cf.q(n)
            y[n] = orbit.dist_to_flat(q[n])
            y_err[n] = orbit.error(q[n])
            if n >= 2:
                s[n] = y[n] / y[n - 2]
                s_err[n] = float(s[n]) * (y_err[n] / float(y[n]) + y_err[n - 2] / float(y[n - 2]))
    return SigmaSeries(tuple(range(n_max + 1)), q, y, y_err, s, s_err)


# ---------------------------------------------------------------------------
# sigma(n, i)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaNI:
    n: int
    values: tuple
    sigma: mpf
    product: mpf

    @property
    def product_log_ratio(self) -> float:
        """ln(sigma(n) / product); bounded but not zero in general."""
        return float(mpmath.log(self.sigma / self.product))


def sigma_ni(orbit: CriticalOrbit, cf: ContinuedFraction, n: int) -> SigmaNI:
    """``sigma(n, i)`` for ``i = 1..a_n``.

    For ``i < a_n`` the ratio is ``|((i-1)q_n, i q_n)| / |(i q_n, (i+1)q_n)|``;
    the last one compares with ``|(a_n q_n, q_{n-2})|`` instead.
    """
    if n < 2:
        raise UndefinedAtLevel(f"sigma({n}, i) needs q_{n - 2}")
    a = cf.a(n)
    qn, q2 = cf.q(n), cf.q(n - 2)
    _need(orbit, max((a + 1) * qn if a > 1 else a * qn, q2))
    vals = []
    with working(orbit.precision):
        for i in range(1, a + 1):
            num = orbit.arc((i - 1) * qn, i * qn)
            den = orbit.arc(i * qn, (i + 1) * qn) if i < a else orbit.arc(a * qn, q2)
            vals.append(num / den)
        prod = mpmath.fprod(vals)
        sigma = orbit.dist_to_flat(qn) / orbit.dist_to_flat(q2)
    return SigmaNI(n, tuple(vals), sigma, prod)


# ---------------------------------------------------------------------------
# mu_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MuEntry:
    n: int
    mu: mpf | None
    error: float
    reliable: bool
    flag: str = ""


def mu_series(sigmas, errors: dict | None = None, noise_factor: float = NOISE_FACTOR) -> list:
    """``mu_n = (sigma(n+2) - sigma(n+1)) / (sigma(n+1) - sigma(n))``.

    ``sigmas`` is a list of ``(n, sigma)`` pairs at consecutive levels (or a
    plain sequence, indexed from 0).  A difference smaller than
    ``noise_factor`` times its error bound marks the entry unreliable
    (``"noise_floor"``); a negative quotient is flagged ``"sign"``.
    """
    pairs = list(sigmas)
    if pairs and not isinstance(pairs[0], tuple):
        pairs = list(enumerate(pairs))
    if len(pairs) < 3:
        raise ValueError("mu needs at least three consecutive sigma values")
    errors = errors or {}
    out = []
    for (n, s0), (_, s1), (n2, s2) in zip(pairs, pairs[1:], pairs[2:]):
        d1, d2 = s1 - s0, s2 - s1
        e1 = errors.get(n, 0.0) + errors.get(n + 1, 0.0)
        e2 = errors.get(n + 1, 0.0) + errors.get(n2, 0.0)
        if d1 == 0 or abs(d1) <= noise_factor * e1:
            out.append(MuEntry(n, None, math.inf, False, "noise_floor"))
            continue
        mu = d2 / d1
        err = abs(float(mu)) * (e1 / abs(float(d1)) + (e2 / abs(float(d2)) if d2 != 0 else math.inf))
        flag = ""
        reliable = True
        if abs(d2) <= noise_factor * e2:
            flag, reliable = "noise_floor", False
        elif mu < 0:
            flag = "sign"
        out.append(MuEntry(n, mu, err, reliable, flag))
    return out


def extrapolate_limit(sigmas, mu=None):
    """Limit of a geometrically converging sequence from its last three terms.

    With ``mu`` the ratio of consecutive differences, the tail sums to
    ``sigma_last + d_last * mu / (1 - mu)``.  A given ``mu`` (for example an
    average over a window) replaces the one from the last three terms.
    """
    vals = [s for _, s in sigmas] if sigmas and isinstance(sigmas[0], tuple) else list(sigmas)
    if len(vals) < 3:
        raise ValueError("need at least three terms")
    d_last = vals[-1] - vals[-2]
    if mu is None:
        d_prev = vals[-2] - vals[-3]
        mu = d_last / d_prev
    if mu >= 1:
        return mpf(-math.inf)
    return vals[-1] + d_last * mu / (1 - mu)


@dataclass(frozen=True)
class DecayClass:
    label: str
    sigma_first: mpf
    sigma_last: mpf
    mu_mean: float
    limit: mpf
    halved: bool

    def as_dict(self) -> dict:
        return {"classification": self.label, "sigma_first": float(self.sigma_first),
                "sigma_last": float(self.sigma_last), "mu_mean": self.mu_mean,
                "extrapolated_limit": float(self.limit), "halved": self.halved}


def classify_decay(sigmas, tail: int = 4) -> DecayClass:
    """``decaying`` or ``bounded-below`` from the geometric extrapolation of the tail.

    A sequence that decays geometrically extrapolates to about zero while
    one converging to a positive limit extrapolates close to its last term,
    so the label is ``bounded-below`` exactly when the extrapolated limit
    exceeds half of the last value.  ``mu`` is averaged over the last
    ``tail`` reliable entries to damp the even/odd wobble.
    """
    pairs = list(sigmas)
    mus = [e.mu for e in mu_series(pairs) if e.mu is not None and e.reliable]
    mu = sum(mus[-tail:]) / len(mus[-tail:]) if mus else None
    limit = extrapolate_limit(pairs, mu)
    first, last = pairs[0][1], pairs[-1][1]
    label = "bounded-below" if limit > last / 2 else "decaying"
    return DecayClass(label, first, last, float(mu) if mu is not None else math.nan, limit, last < first / 2)


# ---------------------------------------------------------------------------
# derivatives along the orbit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeSeries:
    log_D: dict
    rel_err: dict
    checked: dict = field(default_factory=dict)

    def D(self, n: int):
        return mpmath.exp(self.log_D[n])


def derivative_series(orbit: CriticalOrbit, cf: ContinuedFraction, n_max: int,
                      check_limit: int = 1000) -> DerivativeSeries:
    """``D(q_n) = Df^{q_n}(1)`` accumulated as a sum of logarithms.

    For ``q_n <= check_limit`` the direct product is compared with the log
    sum; the relative discrepancy is stored in ``checked``.  ``rel_err`` is
    the first-order propagation of the point errors through ``ln Df``.
    """
    m = orbit.map
    _need(orbit, cf.q(n_max))
    wanted = {cf.q(n): n for n in range(0, n_max + 1)}
    log_D, rel, checked = {}, {}, {}
    with working(orbit.precision):
        acc = mpf(0)
        direct = mpf(1)
        err = 0.0
        for k in range(1, cf.q(n_max) + 1):
            x = orbit.point(k)
            d = m.lift_d(x)
            if d <= 0:
                raise NonpositiveScaling(f"orbit point {k} lies in the flat spot")
            acc += mpmath.log(d)
            if k <= check_limit:
                direct *= d
            err += abs(float(m.branch_nonlinearity(x) if hasattr(m, "branch_nonlinearity") else 0)) * orbit.error(k)
            err += 2.0 ** (-orbit.precision)
            if k in wanted:
                n = wanted[k]
                log_D[n] = +acc
                rel[n] = err
                if k <= check_limit:
                    checked[n] = abs(float(direct / mpmath.exp(acc) - 1))
    return DerivativeSeries(log_D, rel, checked)


# ---------------------------------------------------------------------------
# relations
# ---------------------------------------------------------------------------


RELATIONS = ("preimage", "arc_gap", "image_arc_gap", "derivative_arc", "D_sigma", "sigma_power", "sigma_iterate", "D_unit", "D_product", "sigma_last", "recursion")


@dataclass(frozen=True)
class RelationResidual:
    relation: str
    n: int
    lhs: mpf
    rhs: mpf
    i: int | None = None
    note: str = ""

    @property
    def log_ratio(self) -> float:
        if not (self.lhs > 0 and self.rhs > 0):
            raise NonpositiveScaling(f"relation {self.relation} at n={self.n} has a nonpositive side")
        return float(mpmath.log(self.lhs / self.rhs))


class RelationContext:
    """Lazily computed constituents shared by the relation evaluators."""

    def __init__(self, orbit: CriticalOrbit, cf: ContinuedFraction, backward: BackwardOrbit | None = None):
        self.orbit = orbit
        self.cf = cf
        self.map = orbit.map
        self.nu = orbit.map.nu
        self.backward = backward
        self._sig = {}
        self._D = None

    def gap(self, i: int):
        """``|i| = dist(i, U)``."""
        return self.orbit.dist_to_flat(i)

    def image_gap(self, i: int):
        """``|f(i)| = dist(i + 1, 1)``."""
        return self.orbit.arc(i + 1, 1)

    def sig(self, n: int) -> SigmaNI:
        if n not in self._sig:
            self._sig[n] = sigma_ni(self.orbit, self.cf, n)
        return self._sig[n]

    def D(self, n: int):
        if self._D is None or n not in self._D.log_D:
            self._D = derivative_series(self.orbit, self.cf, max(n, max(self._D.log_D) if self._D else 0))
        return self._D.D(n)

    def preimage_length(self, i: int):
        if self.backward is None or self.backward.length < i:
            from .flatmap import backward_orbit

            self.backward = backward_orbit(self.map, i, self.orbit.precision)
        return self.backward.arc(i).length


def _undefined(rel: str, n: int, why: str):
    raise UndefinedAtLevel(f"relation {rel} undefined at n={n}: {why}")


def relation(ctx: RelationContext, rel: str, n: int) -> list:
    """Both sides of one relation at level ``n`` (one entry per ``i`` where relevant)."""
    cf, nu = ctx.cf, ctx.nu
    a = cf.a(n)
    qn = cf.q(n)
    out = []
    with working(ctx.orbit.precision):
        if rel == "preimage":
            out.append(RelationResidual(rel, n, ctx.preimage_length(qn), ctx.gap(cf.q(n - 1))))
        elif rel == "arc_gap":
            if a < 2:
                _undefined(rel, n, "needs a_n >= 2")
            for i in range(2, a + 1):
                out.append(RelationResidual(rel, n, ctx.orbit.arc((i - 1) * qn, i * qn), ctx.gap(i * qn), i))
        elif rel == "image_arc_gap":
            if a < 2:
                _undefined(rel, n, "needs a_n >= 2")
            for i in range(2, a + 1):
                lhs = ctx.orbit.arc((i - 1) * qn + 1, i * qn + 1)
                out.append(RelationResidual(rel, n, lhs, ctx.image_gap(i * qn), i))
        elif rel == "derivative_arc":
            # i = 1 is included: the arc (0, q_n) is then the gap y_n itself
            for i in range(1, a + 1):
                arc = ctx.orbit.arc((i - 1) * qn, i * qn)
                df = ctx.map.lift_d(ctx.orbit.point(i * qn))
                out.append(RelationResidual(rel, n, arc * df / ctx.image_gap(i * qn), nu, i))
        elif rel == "D_sigma":
            if a < 2:
                _undefined(rel, n, "needs a_n > 1")
            out.append(RelationResidual(rel, n, ctx.D(n), nu / ctx.sig(n).values[0]))
        elif rel == "sigma_power":
            if a < 3:
                _undefined(rel, n, "needs a_n >= 3")
            v = ctx.sig(n).values
            for i in range(2, a):
                out.append(RelationResidual(rel, n, v[i - 1], v[i - 2] ** nu, i))
        elif rel == "sigma_iterate":
            if a < 2:
                _undefined(rel, n, "needs a_n >= 2")
            v = ctx.sig(n).values
            for i in range(1, a):
                out.append(RelationResidual(rel, n, v[i - 1], v[0] ** (nu ** (i - 1)), i))
        elif rel == "D_unit":
            if a != 1:
                _undefined(rel, n, "needs a_n = 1")
            rhs = nu ** cf.a(n - 1) * nu / ctx.sig(n).values[0]
            out.append(RelationResidual(rel, n, ctx.D(n), rhs))
        elif rel == "D_product":
            if a < 2:
                _undefined(rel, n, "needs a_n > 1")
            v = ctx.sig(n).values
            rhs = nu ** cf.a(n - 1) * nu / v[-1] * mpmath.fprod(s ** (nu - 1) for s in v[:-1])
            out.append(RelationResidual(rel, n, ctx.D(n), rhs))
        elif rel == "sigma_last":
            if a < 2:
                _undefined(rel, n, "needs a_n > 1")
            v = ctx.sig(n).values
            out.append(RelationResidual(rel, n, v[-1], nu ** cf.a(n - 1) * v[0] ** (nu ** (a - 1)),
                                        note="prefactor nu^a_{n-1}"))
        elif rel == "recursion":
            lhs = ctx.sig(n + 1).values[0] ** (nu ** cf.a(n + 1))
            rhs = ctx.sig(n).values[0] ** ((1 - nu**a) / (1 - nu)) * ctx.sig(n - 1).values[0]
            out.append(RelationResidual(rel, n, lhs, rhs, note="p = 0; nu^p is absorbed in the constant"))
        else:
            raise ValueError(f"unknown relation {rel!r}")
    return out


def relation_residuals(orbit: CriticalOrbit, cf: ContinuedFraction, levels: Iterable[int],
                       relations: Iterable[str] = RELATIONS, backward: BackwardOrbit | None = None) -> dict:
    """Residual tables keyed by relation; levels where a relation is undefined are skipped."""
    ctx = RelationContext(orbit, cf, backward)
    levels = list(levels)
    if any(r == "preimage" for r in relations):
        ctx.preimage_length(max(cf.q(n) for n in levels))
    out = {}
    for rel in relations:
        rows = []
        for n in levels:
            try:
                rows.extend(relation(ctx, rel, n))
            except UndefinedAtLevel:
                continue
        out[rel] = rows
    return out


def max_abs_log_ratio(rows: list) -> float:
    return max((abs(r.log_ratio) for r in rows), default=float("nan"))


@dataclass(frozen=True)
class Trend:
    slope: float
    low: float
    high: float
    r2: float

    @property
    def contains_zero(self) -> bool:
        return self.low <= 0 <= self.high


def trend(ns, values, confidence: float = 0.95) -> Trend:
    """Least-squares slope with a two-sided t confidence interval."""
    x = np.asarray(list(ns), dtype=float)
    y = np.asarray([float(v) for v in values], dtype=float)
    fit = stats.linregress(x, y)
    tcrit = stats.t.ppf(0.5 + confidence / 2, len(x) - 2)
    half = tcrit * fit.stderr
    return Trend(fit.slope, fit.slope - half, fit.slope + half, fit.rvalue**2)


# ---------------------------------------------------------------------------
# s(n), Gamma(n), R_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SSequence:
    s: dict
    residual: dict


def s_sequence(sigma1: dict, cf: ContinuedFraction, nu) -> SSequence:
    """``s(n) = -nu^{a_n} ln sigma(n,1)`` and the residual of its linear recursion.

    ``residual[n] = s(n+1) - (1 - nu^{-a_n})/(nu - 1) s(n) - nu^{-a_{n-1}} s(n-1)``.
    """
    nu = mpf(nu)
    s = {}
    for n, v in sorted(sigma1.items()):
        if not v > 0:
            raise NonpositiveScaling(f"sigma({n},1) = {v} is not positive")
        s[n] = -(nu ** cf.a(n)) * mpmath.log(v)
    res = {}
    for n in s:
        if n - 1 in s and n + 1 in s:
            res[n] = s[n + 1] - (1 - nu ** (-cf.a(n))) / (nu - 1) * s[n] - nu ** (-cf.a(n - 1)) * s[n - 1]
    return SSequence(s, res)


def gamma_series(orbit: CriticalOrbit, cf: ContinuedFraction, levels: Iterable[int]) -> dict:
    """``Gamma(n) = |(3 q_n, q_n)| / dist(q_n, U)``."""
    out = {}
    with working(orbit.precision):
        for n in levels:
            qn = cf.q(n)
            _need(orbit, 3 * qn)
            out[n] = orbit.arc(3 * qn, qn) / orbit.dist_to_flat(qn)
    return out


def nonlinearity_R(orbit: CriticalOrbit, cf: ContinuedFraction, n: int):
    """``R_n`` from the images of ``A = [dU, a_n q_n]`` and ``B = [a_n q_n, q_{n-2}]``.

    The endpoint of U next to ``a_n q_n`` maps onto the critical value, so
    ``f^k(A)`` runs from the point ``k`` to ``a_n q_n + k`` and ``f^k(B)``
    from ``a_n q_n + k`` to ``q_{n-2} + k``.  Lengths are measured along the
    orientation of A and B, which the map preserves.
    """
    if n < 2:
        raise UndefinedAtLevel("R_n needs q_{n-2}")
    a, qn, q1, q2 = cf.a(n), cf.q(n), cf.q(n - 1), cf.q(n - 2)
    j = a * qn
    _need(orbit, max(j, q2) + q1)
    with working(orbit.precision):
        right = orbit.side(j) == "right"

        def length(u, v):
            # positively oriented from u to v when A lies right of U, else mirrored
            return oriented(u, v) if right else oriented(v, u)

        def img(k):
            return (length(orbit.point(k), orbit.point(j + k)), length(orbit.point(j + k), orbit.point(q2 + k)))

        fa, fb = img(1)
        ga, gb = img(q1)
        return mpmath.log((gb / fb) / (ga / fa))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class ScalingReport:
    """Everything the table and dichotomy commands print, per level."""

    nu: mpf
    series: SigmaSeries
    mu: list
    sigma1: dict = field(default_factory=dict)
    D: DerivativeSeries | None = None
    s: SSequence | None = None
    gamma: dict = field(default_factory=dict)
    R: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def mu_by_n(self) -> dict:
        return {e.n: e for e in self.mu}

    def table_rows(self, n_from: int = 2, mixed: bool = False, bits: int = 256) -> list:
        fmt = (lambda v: mixed_format(v)) if mixed else (lambda v: to_decimal(v, bits))
        mus = self.mu_by_n
        rows = []
        for n in self.series.levels:
            if n < n_from or n not in self.series.sigma:
                continue
            mu = mus.get(n)
            rows.append({
                "n": n,
                "y_n": fmt(self.series.y[n]),
                "sigma_n": fmt(self.series.sigma[n]),
                "mu_n": fmt(mu.mu) if mu is not None and mu.mu is not None else "",
                "mu_flag": mu.flag if mu is not None else "",
            })
        return rows

    def console_table(self, n_from: int = 2, mixed: bool = True) -> str:
        fmt = mixed_format if mixed else sig
        lines = [f"{'n':>3}  {'y_n':>12}  {'sigma(n)':>9}  {'mu_n':>9}"]
        mus = self.mu_by_n
        for n in self.series.levels:
            if n < n_from or n not in self.series.sigma:
                continue
            mu = mus.get(n)
            mu_txt = fmt(mu.mu) + ("*" if mu.flag else "") if mu is not None and mu.mu is not None else ""
            lines.append(f"{n:>3}  {fmt(self.series.y[n]):>12}  {fmt(self.series.sigma[n]):>9}  {mu_txt:>9}")
        return "\n".join(lines)

    def write_table(self, path, n_from: int = 2, mixed: bool = False, bits: int = 256) -> None:
        rows = self.table_rows(n_from, mixed, bits)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["n", "y_n", "sigma_n", "mu_n", "mu_flag"], lineterminator="\n")
            w.writeheader()
            w.writerows(rows)

    def write_extended(self, path, n_from: int = 2, bits: int = 256) -> None:
        fields = ["n", "q_n", "y_n", "y_err", "sigma_n", "sigma_err", "mu_n", "sigma_n1", "D_qn", "s_n", "Gamma_n", "R_n"]
        mus = self.mu_by_n
        dec = lambda v: "" if v is None else to_decimal(v, bits)  # noqa: E731
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for n in self.series.levels:
                if n < n_from or n not in self.series.sigma:
                    continue
                mu = mus.get(n)
                w.writerow({
                    "n": n,
                    "q_n": self.series.q[n],
                    "y_n": dec(self.series.y[n]),
                    "y_err": f"{self.series.y_err[n]:.3e}",
                    "sigma_n": dec(self.series.sigma[n]),
                    "sigma_err": f"{self.series.sigma_err[n]:.3e}",
                    "mu_n": dec(mu.mu) if mu is not None and mu.mu is not None else "",
                    "sigma_n1": dec(self.sigma1.get(n)),
                    "D_qn": dec(self.D.D(n)) if self.D is not None and n in self.D.log_D else "",
                    "s_n": dec(self.s.s.get(n)) if self.s is not None else "",
                    "Gamma_n": dec(self.gamma.get(n)),
                    "R_n": dec(self.R.get(n)),
                })

    def write_residuals(self, path, bits: int = 256) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["relation", "n", "i", "lhs", "rhs", "log_ratio", "note"])
            for rel, rows in self.residuals.items():
                for r in rows:
                    w.writerow([rel, r.n, "" if r.i is None else r.i, to_decimal(r.lhs, bits),
                                to_decimal(r.rhs, bits), f"{r.log_ratio:.12g}", r.note])


def build_report(orbit: CriticalOrbit, cf: ContinuedFraction, n_max: int, *, extended: bool = False,
                 residual_levels: Iterable[int] | None = None) -> ScalingReport:
    """The scaling table, optionally with the derivative and relation columns."""
    series = sigma_series(orbit, cf, n_max)
    mu = mu_series(series.sigmas(), series.sigma_err)
    rep = ScalingReport(orbit.map.nu, series, mu)
    if not extended:
        return rep
    for n in range(2, n_max + 1):
        try:
            rep.sigma1[n] = sigma_ni(orbit, cf, n).values[0]
        except OrbitTooShort:
            break
    d_max = max((n for n in rep.sigma1 if cf.q(n) <= orbit.length), default=0)
    if d_max:
        rep.D = derivative_series(orbit, cf, d_max)
    rep.s = s_sequence(rep.sigma1, cf, orbit.map.nu)
    for n in range(2, n_max + 1):
        if 3 * cf.q(n) <= orbit.length:
            rep.gamma.update(gamma_series(orbit, cf, [n]))
        try:
            rep.R[n] = nonlinearity_R(orbit, cf, n)
        except OrbitTooShort:
            pass
    if residual_levels is not None:
        rep.residuals = relation_residuals(orbit, cf, residual_levels)
    return rep
