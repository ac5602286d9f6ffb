import numpy as np
import pytest

from spikecol.core import SpikeTrain


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_train(rng, size, horizon, n_events):
    """Duplicate-free random events over a ``size`` x ``horizon`` grid."""
    n_events = min(n_events, size * horizon)
    cells = rng.choice(size * horizon, size=n_events, replace=False)
    return SpikeTrain(cells % size, cells // size, horizon, size)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
