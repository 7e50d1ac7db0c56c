import os
import subprocess
import sys

import mpmath
import pytest
from mpmath import mpf

from flatspot import kernel
from flatspot.bigreal import from_raw, to_raw, working
from flatspot.flatmap import canonical, rigid

T = "0.8163501549510784519972224691483575"

IMPLS = kernel.backends()


def spec_and_start(bits, nu="3", b="0.5"):
    with working(bits):
        m = canonical(mpf(b), mpf(T), mpf(nu))
        return m, m.kernel_spec(), to_raw(+mpf(T))


@pytest.mark.skipif("mpfr" not in IMPLS, reason="compiled kernel not built")
@pytest.mark.parametrize("bits", [64, 128, 256, 1024])
@pytest.mark.parametrize("nu", ["3", "2", "2.5"])
def test_backends_agree_bit_for_bit(bits, nu):
    _, spec, x = spec_and_start(bits, nu)
    py = IMPLS["python"].advance(spec, x, 3000, bits, 0.0)
    c = IMPLS["mpfr"].advance(spec, x, 3000, bits, 0.0)
    assert py[0] == c[0]
    assert py[1] == c[1]
    assert py[3] == c[3]
    assert c[2] == pytest.approx(py[2], rel=1e-6)


@pytest.mark.skipif("mpfr" not in IMPLS, reason="compiled kernel not built")
def test_trajectories_agree():
    _, spec, x = spec_and_start(192)
    py = IMPLS["python"].trajectory(spec, x, 500, 192, 0.0)
    c = IMPLS["mpfr"].trajectory(spec, x, 500, 192, 0.0)
    assert py[0] == c[0]
    assert py[1] == c[1]


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_kernel_matches_map_evaluation(name):
    m, spec, x = spec_and_start(256)
    pts, winds, errs, absorbed = IMPLS[name].trajectory(spec, x, 200, 256, 0.0)
    assert absorbed == -1
    with working(256):
        y = from_raw(*x)
        for k in range(200):
            y = mpmath.frac(m.lift(y))
            assert abs(from_raw(*pts[k]) - y) <= errs[k] + mpf(2) ** -240


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_advance_is_last_trajectory_point(name):
    _, spec, x = spec_and_start(128)
    pts, winds, _, _ = IMPLS[name].trajectory(spec, x, 321, 128, 0.0)
    out = IMPLS[name].advance(spec, x, 321, 128, 0.0)
    assert out[0] == pts[-1]
    assert out[1] == sum(winds)


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_flat_spot_absorption_offset(name):
    _, spec, _ = spec_and_start(128)
    with working(128):
        x = to_raw(mpf("0.25"))
    assert IMPLS[name].advance(spec, x, 5, 128, 0.0)[3] == 0


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_rigid_winding_counts(name):
    with working(128):
        spec = rigid(mpf("0.375")).kernel_spec()
        x = to_raw(mpf("0.125"))
    y, winding, _, _ = IMPLS[name].advance(spec, x, 8, 128, 0.0)
    # 0.125 + 8 * 0.375 = 3.125
    assert winding == 3
    with working(128):
        assert from_raw(*y) == mpf("0.125")


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_error_estimate_grows_with_steps(name):
    _, spec, x = spec_and_start(128)
    _, _, errs, _ = IMPLS[name].trajectory(spec, x, 1000, 128, 0.0)
    assert 0 < errs[0] <= errs[-1] * 1e6
    assert errs[-1] < 2.0 ** -60


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, FLATSPOT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import flatspot; print(flatspot.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fallback_reproduces_compiled_orbit():
    code = (
        "from flatspot.flatmap import canonical, validated, critical_orbit\n"
        f"m = validated(canonical('0.5', '{T}', '3'))\n"
        "o = critical_orbit(m, 400, precision=128)\n"
        "print(repr(o.point(400)))\n"
    )
    res = []
    for flag in ("1", ""):
        env = dict(os.environ, FLATSPOT_PURE_PYTHON=flag)
        res.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                  text=True, check=True).stdout)
    assert res[0] == res[1]
