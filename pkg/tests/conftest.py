import mpmath
import pytest
from mpmath import mpf

from flatspot.flatmap import canonical, critical_orbit, validated
from flatspot.rotation import ContinuedFraction, find_parameter

GOLDEN = ContinuedFraction.golden(40)


def golden_parameter(nu: str, precision: int, level: int):
    """t with golden-mean combinatorics up to convergent ``level`` (budget-stopped bisection)."""
    fam = validated(canonical("0.5", "0", nu), precision=precision)
    res = find_parameter(fam, GOLDEN, mpf(2) ** -(precision - 20), max_iters=GOLDEN.q(level),
                         precision=precision, budget_stop=True)
    return fam, res


@pytest.fixture(scope="session")
def golden3():
    """Canonical nu = 3 map at the golden-mean parameter and an orbit through q_27."""
    fam, res = golden_parameter("3", 256, 31)
    m = fam.with_t(res.t)
    orbit = critical_orbit(m, GOLDEN.q(27) + 1, precision=256)
    return {"family": fam, "result": res, "map": m, "orbit": orbit, "cf": GOLDEN}


@pytest.fixture(scope="session")
def golden2():
    fam, res = golden_parameter("2", 512, 26)
    m = fam.with_t(res.t)
    orbit = critical_orbit(m, GOLDEN.q(20) + 1, precision=512)
    return {"family": fam, "result": res, "map": m, "orbit": orbit, "cf": GOLDEN}


@pytest.fixture
def hp():
    with mpmath.workprec(256):
        yield
