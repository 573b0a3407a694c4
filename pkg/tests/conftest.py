import pytest

from diracens.criticality import family
from diracens.spectral import solve_numeric


@pytest.fixture(scope="session")
def quartic_sol():
    """Dirac quartic at a comfortably subcritical, convergent point."""
    return solve_numeric(family("quartic", t2=1, t4=0.05))


@pytest.fixture(scope="session")
def single_quartic_sol():
    return solve_numeric(family("single-quartic", t4=-0.05))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
