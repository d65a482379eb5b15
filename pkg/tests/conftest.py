import pytest

from mimoroc.band_plan import make_default_grid
from mimoroc.cable_model import load_calibration

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def calibration():
    return load_calibration()


@pytest.fixture(scope="session")
def grid():
    return make_default_grid()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
