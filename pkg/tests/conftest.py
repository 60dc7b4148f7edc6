import numpy as np
import pytest

from pusgen.model import ScenarioPUSModel
from pusgen.synthetic import planted_series

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planted():
    """360 synthetic days, 3 planted groups of 2 attributes."""
    return planted_series(n_days=360, seed=0)


@pytest.fixture(scope="session")
def fitted(planted):
    raw, _ = planted
    return ScenarioPUSModel(p_tilde=0.0, restarts=4).fit(raw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
