import numpy as np
import pytest

from hscale_tikhonov import ForwardProblem, Grid, build_scale_from_operator
from hscale_tikhonov.noise import data_scale

# acceptance outcomes collected by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid256():
    return Grid(256)


@pytest.fixture(scope="session")
def linear256(grid256):
    return ForwardProblem("linear-integration", grid256)


@pytest.fixture(scope="session")
def scale256(grid256, linear256):
    return build_scale_from_operator(linear256.J, grid256)


@pytest.fixture(scope="session")
def scale_Y256(grid256):
    return data_scale(grid256)


@pytest.fixture(scope="session")
def small():
    """A 32-point grid with all three operators and the X scale."""
    grid = Grid(32)
    problems = {k: ForwardProblem(k, grid) for k in
                ("linear-integration", "exponential-growth", "autoconvolution")}
    scale = build_scale_from_operator(problems["linear-integration"].J, grid)
    return grid, problems, scale


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
