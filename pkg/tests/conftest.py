import math

import pytest

from corramsey import DDProtocol, NoiseModel, RamseyProtocol, SignalParams


@pytest.fixture
def signal():
    return SignalParams(0.3, 1.5, 0.6)


@pytest.fixture
def ramsey():
    return RamseyProtocol(0.5, 0.25, 12)


@pytest.fixture
def noise():
    return NoiseModel()


@pytest.fixture
def hahn():
    return DDProtocol(1, math.pi)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
