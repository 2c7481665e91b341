import numpy as np
import pytest

from offloadgame import FlowSpec, Linear, ScenarioSpec
from offloadgame.bounded import BoundedFlowSpec

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig1_flows():
    return [BoundedFlowSpec(Linear(1), 0.1), BoundedFlowSpec(Linear(2), 0.3)]


@pytest.fixture
def fig1_scenario():
    def make(B):
        return ScenarioSpec(2, [FlowSpec(Linear(1), (0.1, 0.1)), FlowSpec(Linear(2), (0.3, 0.3))], B)

    return make
