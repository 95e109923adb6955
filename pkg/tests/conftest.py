import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from xmspace import base_spaces as bs
from xmspace.construction import standard_setup
from xmspace.quotient import Setup

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def _setup(space):
    return Setup(*standard_setup(space))


@pytest.fixture(scope="session")
def c0_setup():
    return _setup(bs.c0_space())


@pytest.fixture(scope="session")
def l2_setup():
    return _setup(bs.lp_space(2))


@pytest.fixture(scope="session")
def l3_setup():
    return _setup(bs.lp_space(3))


@pytest.fixture(params=["c0", "l2"])
def setup(request, c0_setup, l2_setup):
    return {"c0": c0_setup, "l2": l2_setup}[request.param]


@pytest.fixture
def report():
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    def emit(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
