import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from leedissip.model import ModelParams, make_grid
from leedissip import spectral

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Lines printed by the acceptance module; echoed in the terminal summary so
# they survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bench():
    return ModelParams()


@pytest.fixture(scope="session")
def bench_grid(bench):
    return make_grid(bench, 1024)


@pytest.fixture(scope="session")
def bench_pole(bench, bench_grid):
    return spectral.find_pole(bench, bench_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
