"""Products of the 2x2 recursion matrices and their contraction.

``B_nu(n) = [[(1 - b(n))/(nu - 1), b(n-1)], [1, 0]]`` for a sequence of
weights ``0 < b(n) <= 1/nu``.  Products are written ``(a, b, c, d)`` for
the matrix ``[[a, b], [c, d]]`` and kept as tuples of mpf because a 2x2
product is cheaper by hand than through a matrix class.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mpf

from .bigreal import DEFAULT_PRECISION, to_decimal, working
from .errors import InadmissibleSequence, LengthMismatch, NotFound
from .rotation import ContinuedFraction

# 4/5; rebuilt at the working precision where it is compared against
CONTRACTION = mpf(4) / 5

Mat2 = tuple

IDENTITY = (mpf(1), mpf(0), mpf(0), mpf(1))


def mul(x: Mat2, y: Mat2) -> Mat2:
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def det(m: Mat2):
    return m[0] * m[3] - m[1] * m[2]


def spectral_radius(m: Mat2):
    a, b, c, d = m
    tr = a + d
    disc = tr * tr - 4 * det(m)
    if disc >= 0:
        r = mpmath.sqrt(disc)
        return max(abs(tr + r), abs(tr - r)) / 2
    return mpmath.sqrt(det(m))


def contraction_factor(m: Mat2):
    """Operator 2-norm, i.e. the largest singular value, in closed form."""
    s = sum(v * v for v in m)
    dd = det(m)
    disc = s * s - 4 * dd * dd
    # rounding can push a double singular value slightly negative
    if disc < 0:
        disc = mpf(0)
    return mpmath.sqrt((s + mpmath.sqrt(disc)) / 2)


@dataclass
class MatrixSeq:
    """Weights ``b(0), b(1), ...`` and the exponent ``nu``."""

    nu: mpf
    b: tuple
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        with working(self.precision):
            self.nu = mpf(self.nu)
            if not self.nu > 1:
                raise InadmissibleSequence(f"nu must exceed 1, got {self.nu}")
            self.b = tuple(mpf(v) for v in self.b)
            if len(self.b) < 2:
                raise InadmissibleSequence("need at least b(0) and b(1)")
            cap = 1 / self.nu
            for n, v in enumerate(self.b):
                if not 0 < v <= cap:
                    raise InadmissibleSequence(f"b({n}) = {v} is outside (0, 1/nu]")

    @classmethod
    def constant(cls, nu, value, length: int, precision: int = DEFAULT_PRECISION) -> "MatrixSeq":
        with working(precision):
            return cls(nu, [mpf(value)] * (length + 1), precision)

    @classmethod
    def from_cf(cls, cf: ContinuedFraction, nu, precision: int = DEFAULT_PRECISION) -> "MatrixSeq":
        """``b(n) = nu^{-a_n}`` for the quotients ``a_0 .. a_depth``; ``a_0`` is replaced by 1 when it is 0."""
        with working(precision):
            nu = mpf(nu)
            b = [nu ** -max(cf.a(n), 1) for n in range(len(cf.quotients) + 1)]
            return cls(nu, b, precision)

    def __len__(self) -> int:
        return len(self.b) - 1

    def matrix(self, n: int) -> Mat2:
        if not 1 <= n <= len(self):
            raise IndexError(f"B({n}) needs b({n}) and b({n - 1})")
        with working(self.precision):
            return ((1 - self.b[n]) / (self.nu - 1), self.b[n - 1], mpf(1), mpf(0))

    def window(self, start: int, length: int) -> Mat2:
        """``B(start + length) ... B(start + 1)``."""
        p = IDENTITY
        with working(self.precision):
            for k in range(start + 1, start + length + 1):
                p = mul(self.matrix(k), p)
        return p

    def with_nu(self, nu) -> "MatrixSeq":
        return MatrixSeq(nu, self.b, self.precision)


def compose(seq: MatrixSeq, n: int, check: bool = True) -> Mat2:
    """``B(n) ... B(1)``; for ``nu = 2`` the entries are checked against the alternating sums."""
    if n > len(seq):
        raise InadmissibleSequence(f"sequence has {len(seq)} matrices, asked for {n}")
    p = seq.window(0, n)
    if check and seq.nu == 2:
        with working(seq.precision):
            alpha, beta = alternating_sums(seq.b, n)
            tol = mpf(2) ** (-seq.precision + 8) * (n + 1)
            if abs(p[0] - alpha) > tol or abs(p[1] - beta) > tol:
                raise ArithmeticError(f"product and closed form disagree at n = {n}")
    return p


def alternating_sums(b: Sequence, n: int) -> tuple:
    """``alpha(n)`` and ``beta(n)`` as the signed sums of tail products of ``b``."""
    alpha = term = mpf(1)
    for k in range(n, 0, -1):
        term = -term * b[k]
        alpha += term
    beta = term = mpf(1)
    for k in range(n, 1, -1):
        term = -term * b[k]
        beta += term
    beta = b[0] * beta if n >= 1 else mpf(0)
    return alpha, beta


def entries(seq: MatrixSeq, n_max: int) -> list:
    """``(n, alpha(n), beta(n))`` for ``n = 1..n_max`` from one running product."""
    out = []
    p = IDENTITY
    with working(seq.precision):
        for n in range(1, n_max + 1):
            p = mul(seq.matrix(n), p)
            out.append((n, p[0], p[1]))
    return out


def dominance_gap(seq: MatrixSeq, n: int):
    """Smallest entry of ``B_2^n - B_nu^n``; the weights must be admissible for both."""
    two = compose(seq.with_nu(2), n, check=False)
    own = compose(seq, n, check=False)
    with working(seq.precision):
        return min(x - y for x, y in zip(two, own))


@dataclass
class FindNResult:
    nu: float
    N: int
    worst_norm: mpf
    trials: int
    profile: list = field(repr=False, default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"nu": float(self.nu), "N": self.N, "worst_norm": float(self.worst_norm),
                           "trials": self.trials}, sort_keys=True)


def _window_norms(b: np.ndarray, nu: float, cap: int) -> np.ndarray:
    """Operator norms of every window, shape ``(cap, starts)``, in double precision."""
    starts = len(b) - cap - 1
    k = 1.0 / (nu - 1.0)
    P = np.tile(np.eye(2), (starts, 1, 1))
    out = np.empty((cap, starts))
    for length in range(1, cap + 1):
        idx = np.arange(starts) + length
        B = np.zeros((starts, 2, 2))
        B[:, 0, 0] = (1 - b[idx]) * k
        B[:, 0, 1] = b[idx - 1]
        B[:, 1, 0] = 1.0
        P = B @ P
        out[length - 1] = np.linalg.norm(P, ord=2, axis=(1, 2))
    return out


def find_N(nu, trials: int = 32, cap: int = 200, seed: int = 0, length: int | None = None,
           precision: int = 128, certify: int = 64) -> FindNResult:
    """Smallest window length from which every tested window product contracts by less than 0.8.

    The tested sequences are ``trials`` uniform draws from ``(0, 1/nu]`` and
    the constant ``b = 1/nu``.  The search runs in double precision; the
    ``certify`` worst windows of length N are then recomputed at ``precision``.
    """
    nu_f = float(nu)
    if nu_f <= 1:
        raise InadmissibleSequence(f"nu must exceed 1, got {nu}")
    rng = random.Random(seed)
    length = length or 2 * cap + 2
    # weights are u/nu with u in (0, 1]; 1 - random() never returns 0
    units = [np.ones(length)] + [np.array([1.0 - rng.random() for _ in range(length)]) for _ in range(trials)]
    norms = [_window_norms(u / nu_f, nu_f, cap) for u in units]
    profile = np.max([n.max(axis=1) for n in norms], axis=0)
    below = profile < float(CONTRACTION)
    N = next((i + 1 for i in range(cap) if below[i:].all()), None)
    if N is None:
        raise NotFound(f"no window length up to {cap} contracts by 0.8 for nu = {nu_f}")
    ranked = sorted(((row[N - 1, j], s, j) for s, row in enumerate(norms) for j in range(row.shape[1])),
                    reverse=True)[:certify]
    worst = mpf(0)
    with working(precision):
        limit = mpf(4) / 5
        nu_hp = mpf(nu)
        for _, s, j in ranked:
            window = units[s][j:j + N + 1]
            ms = MatrixSeq(nu_hp, [mpf(float(u)) / nu_hp for u in window], precision)
            worst = max(worst, contraction_factor(ms.window(0, N)))
        certified = worst < limit
    if not certified:
        raise NotFound(f"double-precision search proposed N = {N} but the certified norm is {worst}")
    return FindNResult(nu_f, N, worst, trials, [float(v) for v in profile])


@dataclass
class ZetaTrack:
    zeta: dict
    residual: dict
    norms: dict

    @property
    def max_norm(self):
        return max(self.norms.values())

    @property
    def max_residual(self):
        return max(self.residual.values()) if self.residual else mpf(0)


def recursion_matrix(cf: ContinuedFraction, nu, n: int) -> Mat2:
    nu = mpf(nu)
    return ((1 - nu ** (-cf.a(n))) / (nu - 1), nu ** (-cf.a(n - 1)), mpf(1), mpf(0))


def zeta_track(s: dict, cf: ContinuedFraction, nu, precision: int = DEFAULT_PRECISION) -> ZetaTrack:
    """``zeta(n) = (s(n), s(n-1))`` and ``|zeta(n+1) - B(n) zeta(n)|``."""
    ns = sorted(s)
    if len(ns) < 2 or ns != list(range(ns[0], ns[-1] + 1)):
        raise LengthMismatch("s must be given on a contiguous range of at least two levels")
    if ns[-1] > len(cf.quotients):
        raise LengthMismatch(f"continued fraction has depth {len(cf.quotients)}, s reaches {ns[-1]}")
    zeta, res, norms = {}, {}, {}
    with working(precision):
        for n in ns[1:]:
            zeta[n] = (mpf(s[n]), mpf(s[n - 1]))
            norms[n] = mpmath.sqrt(zeta[n][0] ** 2 + zeta[n][1] ** 2)
        for n in ns[1:-1]:
            a, b, c, d = recursion_matrix(cf, nu, n)
            z0, z1 = zeta[n]
            nxt = zeta[n + 1]
            res[n] = mpmath.sqrt((nxt[0] - a * z0 - b * z1) ** 2 + (nxt[1] - c * z0 - d * z1) ** 2)
    return ZetaTrack(zeta, res, norms)


def write_entries(path, seq: MatrixSeq, n_max: int, window: int = 1) -> None:
    """CSV ``n, alpha_n, beta_n, opnorm_of_window``; the window ends at ``n``."""
    rows = entries(seq, n_max)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "alpha_n", "beta_n", "opnorm_of_window"])
        with working(seq.precision):
            for n, a, b in rows:
                L = min(window, n)
                norm = contraction_factor(seq.window(n - L, L))
                w.writerow([n, to_decimal(a, seq.precision), to_decimal(b, seq.precision),
                            to_decimal(norm, seq.precision)])


def admissible_from_file(path, nu, precision: int = DEFAULT_PRECISION) -> MatrixSeq:
    """One weight per line; blank lines and ``#`` comments are skipped."""
    vals: list = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                vals.append(line)
    if not vals:
        raise InadmissibleSequence(f"{path} holds no weights")
    with working(precision):
        return MatrixSeq(nu, [mpf(v) for v in vals], precision)


def bounded_entries(seq: MatrixSeq, n_max: int, alpha_cap=2, beta_cap=1) -> bool:
    return all(a <= alpha_cap and b <= beta_cap for _, a, b in entries(seq, n_max))

