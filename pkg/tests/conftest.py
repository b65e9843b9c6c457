import numpy as np
import pytest

from helpers import ACCEPTANCE_LINES, small_config
from mmnoma.harness import realize


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def small_realization():
    """K=5, B=2, N=2, M_AP=12 draw from the built-in lecture hall."""
    return realize(small_config(), None, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
