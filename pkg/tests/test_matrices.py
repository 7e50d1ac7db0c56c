import json

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from flatspot.bigreal import working
from flatspot.errors import InadmissibleSequence, LengthMismatch, NotFound
from flatspot.matrices import (
    IDENTITY,
    MatrixSeq,
    admissible_from_file,
    alternating_sums,
    bounded_entries,
    compose,
    contraction_factor,
    dominance_gap,
    entries,
    find_N,
    mul,
    recursion_matrix,
    spectral_radius,
    write_entries,
    zeta_track,
)
from flatspot.rotation import ContinuedFraction


def test_single_matrix():
    seq = MatrixSeq.constant(3, mpf(1) / 4, 3, precision=128)
    with working(128):
        assert compose(seq, 1) == (mpf(3) / 8, mpf(1) / 4, 1, 0)


def test_eigenvalues_of_constant_matrices():
    with working(128):
        seq = MatrixSeq(3, [mpf(1) / 3] * 3, 128)
        lam = spectral_radius(seq.matrix(1))
        assert abs(lam - (1 + mpmath.sqrt(13)) / 6) < mpf(10) ** -20
        half = MatrixSeq(2, [mpf(1) / 2] * 3, 128)
        assert abs(spectral_radius(half.matrix(1)) - 1) < mpf(10) ** -20


def test_identity_norm():
    with working(128):
        assert abs(contraction_factor(IDENTITY) - 1) < mpf(10) ** -30


def test_norm_of_rank_one():
    with working(128):
        # [[1, 1], [1, 1]] has singular values 2 and 0
        assert abs(contraction_factor((mpf(1), mpf(1), mpf(1), mpf(1))) - 2) < mpf(10) ** -30


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 100), min_size=6, max_size=6))
def test_product_is_associative(ws):
    with working(192):
        seq = MatrixSeq(2, [mpf(w) / 200 for w in ws], 192)
        left = mul(seq.window(2, 3), seq.window(0, 2))
        whole = seq.window(0, 5)
        assert all(abs(x - y) < mpf(10) ** -50 for x, y in zip(left, whole))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 100), min_size=10, max_size=10))
def test_closed_form_at_two(ws):
    with working(192):
        seq = MatrixSeq(2, [mpf(w) / 200 for w in ws], 192)
        p = compose(seq, 9, check=False)
        alpha, beta = alternating_sums(seq.b, 9)
        assert abs(p[0] - alpha) < mpf(10) ** -50
        assert abs(p[1] - beta) < mpf(10) ** -50


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(1, 100), min_size=12, max_size=12), st.sampled_from(["2.5", "3", "4"]))
def test_nu_two_dominates(ws, nu):
    with working(128):
        nu = mpf(nu)
        seq = MatrixSeq(nu, [mpf(w) / 100 / nu for w in ws], 128)
        assert dominance_gap(seq, 11) >= 0


def test_admissibility_enforced():
    with pytest.raises(InadmissibleSequence):
        MatrixSeq(3, [mpf("0.5"), mpf("0.1")])
    with pytest.raises(InadmissibleSequence):
        MatrixSeq(3, [mpf(0), mpf("0.1")])
    with pytest.raises(InadmissibleSequence):
        MatrixSeq(1, [mpf("0.5"), mpf("0.5")])


def test_entries_bounded_for_half():
    seq = MatrixSeq.constant(2, mpf(1) / 2, 2000, precision=128)
    assert bounded_entries(seq, 2000)
    last = entries(seq, 2000)[-1]
    # alpha(n) -> 2/3, beta(n) -> 1/3
    with working(128):
        assert abs(last[1] - mpf(2) / 3) < 1e-20 and abs(last[2] - mpf(1) / 3) < 1e-20


def test_from_cf_weights():
    cf = ContinuedFraction.from_quotients([1, 2, 3])
    seq = MatrixSeq.from_cf(cf, 3, precision=128)
    with working(128):
        assert seq.b[0] == mpf(1) / 3
        assert seq.b[3] == mpf(1) / 27


def test_zeta_track_of_exact_recursion():
    cf = ContinuedFraction.from_quotients([1, 2, 1, 1, 3, 1, 2, 1])
    with working(256):
        s = {1: mpf("0.3"), 2: mpf("0.7")}
        for n in range(2, 8):
            a, b, c, d = recursion_matrix(cf, 3, n)
            s[n + 1] = a * s[n] + b * s[n - 1]
        tr = zeta_track(s, cf, 3, 256)
    assert tr.max_residual < mpf(10) ** -60
    assert tr.max_norm > 0


def test_zeta_track_input_checks():
    cf = ContinuedFraction.golden(5)
    with pytest.raises(LengthMismatch):
        zeta_track({1: 1}, cf, 3)
    with pytest.raises(LengthMismatch):
        zeta_track({1: 1, 3: 1}, cf, 3)
    with pytest.raises(LengthMismatch):
        zeta_track({n: 1 for n in range(1, 9)}, cf, 3)


def test_find_N_for_three():
    res = find_N(3, trials=8, cap=60)
    assert res.N >= 1
    assert res.worst_norm < mpf("0.8")
    doc = json.loads(res.to_json())
    assert set(doc) == {"nu", "N", "worst_norm", "trials"}


def test_find_N_hits_cap_at_two():
    with pytest.raises(NotFound):
        find_N(2, trials=4, cap=60)


def test_csv_export(tmp_path):
    seq = MatrixSeq.constant(3, mpf(1) / 3, 10, precision=128)
    path = tmp_path / "m.csv"
    write_entries(path, seq, 10, window=3)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,alpha_n,beta_n,opnorm_of_window"
    assert len(lines) == 11


def test_weights_from_file(tmp_path):
    p = tmp_path / "b.txt"
    p.write_text("# weights\n0.25\n\n0.3\n")
    seq = admissible_from_file(p, 3)
    assert len(seq) == 1
    empty = tmp_path / "e.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(InadmissibleSequence):
        admissible_from_file(empty, 3)
