import numpy as np
import pytest

from frnlab.bubbles import FracParams
from frnlab.kprofile import demo_profile

ACCEPTANCE_LINES = []


@pytest.fixture
def P():
    return FracParams(3, 0.5)


@pytest.fixture
def profile():
    return demo_profile()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
