import numpy as np
import pytest

from hsmatch.core import SpectralCube


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cube(rng, width=6, height=5, bands=8, low=0.0, high=1.0):
    return SpectralCube(width, height, rng.uniform(low, high, size=(width * height, bands)))


@pytest.fixture
def cube(rng):
    return random_cube(rng)


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE_LINES = []


def report_criterion(number, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"criterion {number}: {status}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
