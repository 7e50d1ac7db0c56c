from fractions import Fraction

import mpmath
import pytest
from mpmath import mpf

from flatspot.bigreal import working
from flatspot.errors import BudgetExceeded, InsufficientAccuracy
from flatspot.flatmap import canonical, critical_orbit, rigid, validated
from flatspot.rotation import (
    ContinuedFraction,
    RotationNumber,
    check_closest_returns,
    closest_returns,
    compare_rotation,
    continued_fraction,
    find_parameter,
    locking_interval,
    rotation_number,
)


def fib(n):
    a, b = 1, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def test_golden_convergents_are_fibonacci():
    cf = ContinuedFraction.golden(30)
    assert cf.qs == [fib(n) for n in range(31)]
    assert cf.ps[1:] == [fib(n - 1) for n in range(1, 31)]
    with working(128):
        assert abs(cf.value(128) - (mpmath.sqrt(5) - 1) / 2) < mpf(1) / fib(30) ** 2


def test_silver_recurrence():
    cf = ContinuedFraction.silver(12)
    qs = cf.qs
    assert qs[:4] == [1, 2, 5, 12]
    assert all(qs[n] == 2 * qs[n - 1] + qs[n - 2] for n in range(2, 13))


def test_rational_continued_fraction():
    cf = continued_fraction(RotationNumber.rational(3, 7), 10)
    assert cf.exact
    assert cf.quotients == (2, 3)
    assert cf.convergent(cf.depth) == Fraction(3, 7)


def test_golden_enclosure_certifies_ones():
    cf = continued_fraction(RotationNumber.golden(256), 60)
    assert set(cf.quotients) == {1}


def test_coarse_enclosure_refuses_depth():
    with pytest.raises(InsufficientAccuracy):
        continued_fraction(RotationNumber.enclosure(mpf("0.618"), mpf("0.6181")), 40)


def test_level_for():
    cf = ContinuedFraction.golden(20)
    assert cf.level_for(89) == 10
    assert cf.level_for(88) == 9


def test_rigid_golden_enclosure():
    with working(128):
        g = (mpmath.sqrt(5) - 1) / 2
        m = validated(rigid(g), precision=128)
        rho = rotation_number(m, mpf("1e-9"), precision=128)
        assert not rho.is_rational
        assert rho.lo <= g <= rho.hi
        assert rho.hi - rho.lo <= mpf("1e-9")


def test_rigid_rational_is_exact():
    m = validated(rigid("0.375"))
    rho = rotation_number(m, mpf("1e-6"))
    assert rho.is_rational and rho.fraction == Fraction(3, 8)


def test_budget_exhaustion_is_reported():
    with working(128):
        m = validated(rigid((mpmath.sqrt(5) - 1) / 2))
    with pytest.raises(BudgetExceeded):
        rotation_number(m, mpf("1e-12"), max_iters=1000)


def test_plateau_at_one_half():
    fam = validated(canonical("0.5", "0", "3"))
    res = find_parameter(fam, Fraction(1, 2), mpf("1e-30"))
    assert res.stopped_by == "plateau"
    rho = rotation_number(fam.with_t(res.t), mpf("1e-6"))
    assert rho.is_rational and rho.fraction == Fraction(1, 2)


def test_rotation_number_increases_with_t():
    fam = validated(canonical("0.5", "0", "3"))
    vals = []
    for t in ("0.1", "0.45", "0.7", "0.9"):
        rho = rotation_number(fam.with_t(mpf(t)), mpf("1e-4"))
        vals.append(rho.value)
    assert vals == sorted(vals)


def test_compare_rotation_brackets_golden():
    fam = validated(canonical("0.5", "0", "3"))
    cf = ContinuedFraction.golden(20)
    assert compare_rotation(fam.with_t(mpf("0.2")), cf)[0] < 0
    assert compare_rotation(fam.with_t(mpf("0.99")), cf)[0] > 0


def test_locking_widths_shrink():
    fam = validated(canonical("0.5", "0", "2"))
    cf = ContinuedFraction.golden(20)
    widths = [locking_interval(fam, n, cf, mpf(2) ** -120, precision=192).width for n in range(3, 9)]
    assert all(w > 0 for w in widths)
    assert all(b < a for a, b in zip(widths, widths[1:]))


def test_locking_interval_is_a_plateau():
    fam = validated(canonical("0.5", "0", "3"))
    cf = ContinuedFraction.golden(10)
    li = locking_interval(fam, 4, cf, mpf(2) ** -80, precision=128)
    with working(128):
        inside = (li.t_left + li.t_right) / 2
        rho = rotation_number(fam.with_t(inside), mpf("1e-6"), precision=128)
    assert rho.is_rational and rho.fraction == cf.convergent(4)


@pytest.fixture(scope="module")
def near_golden():
    fam = validated(canonical("0.5", "0", "3"))
    cf = ContinuedFraction.golden(30)
    res = find_parameter(fam, cf, mpf(2) ** -100, max_iters=cf.q(20), budget_stop=True)
    return fam, cf, res


def test_golden_search_follows_combinatorics(near_golden):
    fam, cf, res = near_golden
    assert res.level >= 18
    orbit = critical_orbit(fam.with_t(res.t), cf.q(16) + 1)
    checks = check_closest_returns(closest_returns(orbit, cf, 16, n_min=2))
    assert checks == {"decreasing": True, "alternating": True}


def test_golden_parameter_value(near_golden):
    _, _, res = near_golden
    assert abs(res.t - mpf("0.81635015")) < 1e-7
