import pytest

# one line per acceptance criterion, printed after the run (see test_acceptance)
_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criteria_log() -> list[str]:
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
