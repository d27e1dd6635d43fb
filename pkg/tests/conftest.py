import pytest

from erci.preprocess import to_core
from erci.toys import coin_mdp, patrol_toy, replanning_toy

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def coin():
    return to_core(coin_mdp())


@pytest.fixture(scope="session")
def patrol():
    return to_core(patrol_toy())


@pytest.fixture(scope="session")
def replan():
    return to_core(replanning_toy())
