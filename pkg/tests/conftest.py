import random
from fractions import Fraction

import pytest

from lasgap.lattice import LatticeVector, Repr


def rand_rational(rng, lo=-5, hi=5, den=12):
    return Fraction(rng.randint(lo * den, hi * den), rng.randint(1, den))


def rand_full(rng, n, kind=Repr.MOMENT, **kw):
    return LatticeVector.from_mask_array(n, kind, [rand_rational(rng, **kw) for _ in range(1 << n)])


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
