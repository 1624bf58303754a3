import os

import numpy as np
import pytest

from garma_mi.core import Family, ModelSpec, ParamVector
from garma_mi.engine import simulate

GAMMA1 = ParamVector(0.5, [-0.4], [-0.6], 20.0)
BARMA = ModelSpec(Family.BETA, 1, 1)

ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("GARMA_FULL_GRID") == "1":
        return
    skip = pytest.mark.skip(reason="set GARMA_FULL_GRID=1 to run the full grid")
    for item in items:
        if "full_grid" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def gamma1():
    return GAMMA1


@pytest.fixture
def barma():
    return BARMA


@pytest.fixture(scope="session")
def series1():
    """One seeded scenario-1 beta series of length 500."""
    return simulate(GAMMA1, BARMA, 500, 100, np.random.default_rng(20240101)).y
