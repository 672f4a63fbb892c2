import pytest
from hypothesis import settings

from helpers import load

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig1a():
    return load("fig1a")


@pytest.fixture(scope="session")
def fig1b():
    return load("fig1b")


@pytest.fixture(scope="session")
def fig2():
    return load("fig2")


@pytest.fixture(scope="session")
def fig3a():
    return load("fig3a")


@pytest.fixture(scope="session")
def fig4a():
    return load("fig4a")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
