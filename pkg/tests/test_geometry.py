import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from flatspot.bigreal import working
from flatspot.circle import Arc
from flatspot.errors import DegenerateQuadruple, InconclusiveWindow, OrderingViolation
from flatspot.flatmap import canonical, validated
from flatspot.geometry import (
    Quadruple,
    chain,
    cross_ratio,
    dcr_product,
    decay_experiment,
    hausdorff_upper,
    lebesgue_deficit,
    multiplicity,
    nesting_defect,
    partitions,
    power_law_quotient,
    predicted_subdivision,
    refines,
    rescaled_nonlinearity,
    subdivision,
)


def test_cross_ratio_of_even_quadruple(hp):
    q = Quadruple.ordered(0, mpf(1) / 4, mpf(1) / 2, mpf(3) / 4)
    assert abs(cross_ratio(q) - mpf(1) / 4) < mpf(10) ** -70


def test_cross_ratio_accepts_reversed_order(hp):
    q = Quadruple.ordered(mpf(3) / 4, mpf(1) / 2, mpf(1) / 4, 0)
    assert abs(cross_ratio(q) - mpf(1) / 4) < mpf(10) ** -70


def test_scrambled_quadruple_rejected(hp):
    with pytest.raises(DegenerateQuadruple):
        Quadruple.ordered(0, mpf(1) / 2, mpf(1) / 4, mpf(3) / 4)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 1000), min_size=4, max_size=4, unique=True),
       st.integers(1, 50), st.integers(0, 1000))
def test_cross_ratio_affine_invariance(pts, scale, shift):
    with working(192):
        a, b, c, d = sorted(mpf(p) / 4096 for p in pts)
        lam, s = mpf(scale) / 64, mpf(shift) / 4096
        base = cross_ratio(Quadruple(a, b, c, d))
        moved = Quadruple(*(mpmath.frac(lam * x + s) for x in (a, b, c, d)))
        if mpmath.floor(lam * d + s) != mpmath.floor(lam * a + s):
            return
        assert abs(cross_ratio(moved) - base) < mpf(10) ** -50


def test_power_law_quotient_limit(hp):
    r, limit = power_law_quotient(1, 2, 3, 2)
    assert abs(limit - mpf(3) / 4) < mpf(10) ** -70
    r_close, _ = power_law_quotient(1, 2, 2 + mpf(10) ** -30, 2)
    assert abs(r_close - limit) < mpf(10) ** -29
    # for nu > 1 the quotient increases to its limit as z decreases
    assert r < r_close


def test_power_law_ordering_checked():
    with pytest.raises(OrderingViolation):
        power_law_quotient(2, 1, 3, 2)


def test_multiplicity_sweep():
    arcs = [Arc(mpf("0.1"), mpf("0.3")), Arc(mpf("0.2"), mpf("0.4")), Arc(mpf("0.3"), mpf("0.5")),
            Arc(mpf("0.9"), mpf("0.15")), Arc(mpf("0.25"), mpf("0.28"))]
    assert multiplicity(arcs) == 3
    # the arc across 0 overlaps (0.1, 0.3) only
    assert multiplicity(arcs[:4]) == 2
    assert multiplicity([Arc(mpf("0.1"), mpf("0.2")), Arc(mpf("0.2"), mpf("0.3"))]) == 1


def test_rigid_rotation_keeps_cross_ratio(hp):
    from flatspot.flatmap import rigid

    m = validated(rigid("0.375"))
    q = Quadruple.ordered(mpf("0.1"), mpf("0.11"), mpf("0.12"), mpf("0.13"))
    res = dcr_product(m, q, 2)
    assert abs(res.product - 1) < mpf(10) ** -60
    assert res.multiplicity >= 1


@pytest.fixture(scope="module")
def parts(golden3):
    with working(256):
        return partitions(golden3["map"], golden3["cf"], range(2, 11), precision=256)


def test_partition_shapes(parts, golden3):
    cf = golden3["cf"]
    for p in parts:
        assert len(p.boxes) == cf.q(p.n + 1)
        assert len(p.circs) == cf.q(p.n)


def test_partition_tiles_the_circle(parts):
    with working(256):
        for p in parts:
            assert abs(p.total_length() - 1) < 1e-50


def test_S_at_zero_and_one(parts, golden3):
    cf = golden3["cf"]
    for p in parts:
        assert p.S(0) == cf.q(p.n + 1) + cf.q(p.n)
        assert p.S(1) == p.total_hole_length()


def test_nesting_and_refinement(parts):
    for coarse, fine in zip(parts, parts[1:]):
        assert nesting_defect(coarse, fine) < 1e-50
        assert refines(coarse, fine)


def test_subdivision_matches_combinatorics(parts, golden3):
    for coarse, fine in zip(parts, parts[1:]):
        assert subdivision(coarse, fine) == predicted_subdivision(golden3["cf"], fine.n)


def test_deficit_decreases(parts):
    fit = lebesgue_deficit(parts)
    assert fit.strictly_decreasing
    assert fit.rate_high < 1


def test_hausdorff_estimate_below_one(parts):
    est = hausdorff_upper(parts)
    assert est.alpha is not None and est.alpha < 1
    assert est.verdict == "upper bound estimate"


def test_hausdorff_inconclusive_window(parts):
    grid = [0.1, 0.2]
    with pytest.raises(InconclusiveWindow):
        hausdorff_upper(parts, grid, refine=0)
    est = hausdorff_upper(parts, grid, refine=0, raise_inconclusive=False)
    assert est.alpha is None and est.verdict == "inconclusive"


def test_decay_experiment_records_gamma(golden3):
    out = decay_experiment(golden3["orbit"], golden3["cf"], 8)
    assert out["Gamma"] > 0
    assert out["shortest"] > 0


def test_rescaled_nonlinearity_of_preimage_chain(golden3):
    m = golden3["map"]
    with working(256):
        I0 = Arc(mpf("0.7"), mpf("0.701"))
        ch = chain(m, I0, 6)
        res = rescaled_nonlinearity(m, ch)
    assert res.sup >= 0
    assert res.total_length > 0
    assert abs(res.cross_ratio - mpf(1) / 4) < 1e-30
