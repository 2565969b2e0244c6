import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kickcorr.integrals import IntegralSet, make_hubbard_model  # noqa: E402


def random_integrals(norb, nelec, rng, ms2=None, e_core=0.3):
    """Real integrals with full eightfold symmetry."""
    h = rng.standard_normal((norb, norb))
    h = h + h.T
    g = rng.standard_normal((norb,) * 4) * 0.3
    g = g + g.transpose(1, 0, 2, 3)
    g = g + g.transpose(0, 1, 3, 2)
    g = g + g.transpose(2, 3, 0, 1)
    if ms2 is None:
        ms2 = nelec % 2
    return IntegralSet(norb, nelec, ms2, e_core, h, g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dimer():
    return make_hubbard_model(2, 1.0, 4.0)


@pytest.fixture(scope="session")
def ring6():
    return make_hubbard_model(6, 1.0, 4.0, periodic=True)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda x: int(x.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
