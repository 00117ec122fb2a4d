import numpy as np
import pytest

from supfts.grid_curves import CurveSet, Grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid():
    return Grid.uniform(101)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def step_series(grid, n, k, jump):
    """Rows 1..k are zero, rows k+1..n equal ``jump``."""
    vals = np.zeros((n, grid.size))
    vals[k:] = jump
    return CurveSet(grid, vals)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
