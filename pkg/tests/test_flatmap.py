import random

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from flatspot import flatmap
from flatspot.bigreal import working
from flatspot.errors import ConfigError, FlatSpotDomain, UnvalidatedMap, ValidationRejected
from flatspot.flatmap import (
    CustomMap,
    polynomial,
    backward_orbit,
    canonical,
    critical_orbit,
    map_config,
    rigid,
    validate,
    validated,
)


# close to the golden-mean parameter, so the critical orbit is not absorbed early
T = "0.8163501549510784519972224691483575"


@pytest.fixture(scope="module")
def m3():
    return validated(canonical("0.5", T, "3"))


def test_flat_spot_maps_to_one_point(hp):
    m = validated(canonical("0.5", "0.3", "2"))
    assert flatmap.eval(m, mpf("0.25")) == mpf("0.3")
    assert flatmap.deriv(m, mpf("0.25")) == 0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-3, max_value=3, allow_nan=False))
def test_degree_one(x):
    m = validated(canonical("0.5", "0.3", "3"))
    with working(256):
        x = mpf(x)
        assert abs(flatmap.eval(m, x + 1) - flatmap.eval(m, x) - 1) < mpf(2) ** -128


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
def test_monotone(x, y):
    m = validated(canonical("0.4", "0.1", "2.5"))
    with working(256):
        lo, hi = sorted((mpf(x), mpf(y)))
        assert flatmap.eval(m, lo) <= flatmap.eval(m, hi)


def test_derivative_at_bridge_midpoint(hp):
    b = mpf("0.3")
    m = validated(canonical(b, "0", "2"))
    x = b + (1 - b) / 2
    assert abs(flatmap.deriv(m, x) - 2 / (1 - b)) < mpf(10) ** -60


def test_derivative_matches_finite_differences(hp, m3):
    h = mpf(10) ** -20
    for x in [mpf(v) / 16 for v in range(9, 16)]:
        fd = (flatmap.eval(m3, x + h) - flatmap.eval(m3, x - h)) / (2 * h)
        assert abs(flatmap.deriv(m3, x) - fd) < mpf(10) ** -30


def test_nonlinearity_edge_asymptotics(hp, m3):
    for k in (20, 40, 60):
        h = mpf(2) ** -k
        assert abs(flatmap.nonlinearity(m3, m3.right + h) * h - 2) < 2 ** (-k + 4)
    assert flatmap.nonlinearity(m3, m3.right + mpf("0.01")) > 0
    assert flatmap.nonlinearity(m3, m3.left + 1 - mpf("0.01")) < 0


def test_nonlinearity_undefined_on_flat_spot(hp, m3):
    with pytest.raises(FlatSpotDomain):
        flatmap.nonlinearity(m3, mpf("0.2"))


def test_rigid_has_zero_nonlinearity(hp):
    m = validated(rigid("0.25"))
    assert flatmap.nonlinearity(m, mpf("0.7")) == 0


def test_guarded_operations_need_validation(hp):
    with pytest.raises(UnvalidatedMap):
        flatmap.eval(canonical("0.5", "0.3", "3"), mpf("0.7"))


@pytest.mark.parametrize("nu", ["1.5", "2", "2.5", "3"])
def test_exponent_recovery(nu):
    rep = validate(canonical("0.5", "0.3", nu))
    assert rep.usable
    for fit in (rep.exponent_left, rep.exponent_right):
        assert abs(fit.estimate - float(nu)) < 0.01 * float(nu)


def test_canonical_exponent_estimate():
    rep = validate(canonical("0.5", "0.3", "3"))
    assert abs(rep.exponent_right.estimate - 3) < 0.01


def test_polynomial_family_is_rejected():
    rep = validate(polynomial("0.5", "0"))
    assert not rep.usable
    assert any("monotonicity violated" in f for f in rep.failures)
    with pytest.raises(ValidationRejected):
        validated(polynomial("0.5", "0"))


def test_broken_family_rejected_with_location():
    def bumpy(y):
        u = (y - mpf("0.5")) * 2
        return u + mpf("0.3") * mpmath.sin(4 * mpmath.pi * u)

    bad = CustomMap(b=mpf("0.5"), t=mpf("0.1"), nu=mpf(1), func=bumpy)
    rep = validate(bad, grid=512)
    assert not rep.usable
    assert any(f.startswith("monotonicity violated at x") for f in rep.failures)


def test_chain_rule_along_orbit(hp, m3):
    # follow the orbit of x only while it stays off the flat spot
    x = mpf("0.93")
    pts = [x]
    while mpmath.frac(pts[-1]) > m3.right and len(pts) < 40:
        pts.append(m3.lift(pts[-1]))
    pts.pop()
    k = len(pts) - 1
    assert k >= 2
    prod = mpmath.fprod(m3.lift_d(p) for p in pts[:-1])
    h = mpf(2) ** -100
    y = x + h
    for _ in range(k):
        y = m3.lift(y)
    fd = (y - pts[-1]) / h
    assert abs(fd / prod - 1) < mpf(2) ** -20


def test_inverse_round_trip(hp, m3):
    rng = random.Random(1)
    for _ in range(50):
        y = mpf(rng.random())
        if y == mpmath.mpf("0.3"):
            continue
        x = m3.inverse(y)
        assert abs(mpmath.frac(m3.lift(x)) - y) < mpf(2) ** -200


def test_orbit_starts_at_critical_value(m3):
    o = critical_orbit(m3, 1)
    assert o.length == 1
    assert o.point(1) == m3.t
    assert o.arc(0, 1) == o.dist_to_flat(1)


def test_orbit_consistency_at_higher_precision(m3):
    o = critical_orbit(m3, 500)
    with working(512):
        for i in (1, 17, 250, 499):
            assert abs(mpmath.frac(m3.lift(o.point(i))) - o.point(i + 1)) < 1e-60


def test_orbit_precision_stability(m3):
    lo = critical_orbit(m3, 2000, precision=128)
    hi = critical_orbit(m3, 2000, precision=256)
    with working(256):
        for i in range(1, 2001, 97):
            assert abs(lo.point(i) - hi.point(i)) <= lo.error(i) + hi.error(i)


def test_absorbed_orbit_for_half_rotation():
    # t for which the critical orbit returns to U after two steps
    fam = validated(canonical("0.5", "0", "3"))
    with working(256):
        m = fam.with_t(mpf("0.3"))
        o = critical_orbit(m, 10)
    assert o.absorbed_at is not None
    assert o.rotation is not None


def test_fixed_point_orbit_absorbed_immediately():
    m = validated(canonical("0.5", "0.25", "3"))
    o = critical_orbit(m, 10)
    assert o.absorbed_at == 1
    assert o.rotation == 0


def test_backward_orbit_preimages_map_forward(hp, m3):
    back = backward_orbit(m3, 30)
    for i in (1, 5, 30):
        lo, hi = back.arc(i)
        prev = back.arc(i - 1)
        assert abs(mpmath.frac(m3.lift(lo)) - prev.left) < 1e-50
        assert abs(mpmath.frac(m3.lift(hi)) - prev.right) < 1e-50


@pytest.mark.parametrize("doc", [
    {},
    {"family": "elliptic", "b": "0.5"},
    {"family": "canonical", "b": 0.5, "nu": "3"},
    {"family": "canonical", "b": "0.5"},
    {"family": "canonical", "b": "1.5", "nu": "3"},
    {"family": "canonical", "b": "0.5", "nu": "3", "precision_bits": 32},
])
def test_map_config_errors(doc):
    with pytest.raises(ConfigError):
        map_config(doc)


def test_map_config_builds_at_requested_precision():
    cfg = map_config({"family": "canonical", "b": "0.5", "t": "0.1", "nu": "3", "precision_bits": 512})
    m = cfg.build()
    with working(512):
        assert m.t == mpf(1) / 10
