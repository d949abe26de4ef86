from __future__ import annotations

import numpy as np
import pytest

from mtdgrid import load_case


@pytest.fixture(scope="session")
def ieee14():
    return load_case("ieee14")


@pytest.fixture(scope="session")
def fig1():
    return load_case("bus4_fig1")


@pytest.fixture(scope="session")
def fig3():
    return load_case("bus4_fig3")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
