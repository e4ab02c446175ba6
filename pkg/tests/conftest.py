import numpy as np
import pytest
from hypothesis import settings

from schrohum.grids import SpatialGrid, TimeGrid

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repro")

# lines appended by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").rstrip("abcd"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def test1_grid():
    return SpatialGrid(1.0, 40, (0.25, 0.75))


@pytest.fixture
def test1_time():
    return TimeGrid(0.4, 80)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
