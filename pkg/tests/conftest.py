import pytest

from propxl import ClaimModel, UtilityConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def exp1():
    return ClaimModel.exponential(1.0)


@pytest.fixture(scope="session")
def insurer_cfg():
    return UtilityConfig(beta=2.0, loading=0.8)


@pytest.fixture(scope="session")
def reinsurer_cfg():
    return UtilityConfig(beta=0.2, loading=0.3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
