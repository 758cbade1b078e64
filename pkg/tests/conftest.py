import numpy as np
import pytest

from metasense.lattice import REFERENCE_GEOMETRY, LumpedChain, reduce_geometry


@pytest.fixture(scope="session")
def ref_chain():
    return reduce_geometry(REFERENCE_GEOMETRY)


@pytest.fixture
def toy_chain():
    return LumpedChain(3, m_p=0.1, m_r=0.05, k_p=2000.0, k_r=300.0, zeta=0.02)


def random_chain(rng, n_cells=None):
    return LumpedChain(
        int(n_cells or rng.integers(1, 8)),
        m_p=10 ** rng.uniform(-3, 0), m_r=10 ** rng.uniform(-3, 0),
        k_p=10 ** rng.uniform(1, 5), k_r=10 ** rng.uniform(1, 5),
        zeta=rng.uniform(0.001, 0.1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES,
                           key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
