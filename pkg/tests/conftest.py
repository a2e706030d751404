import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record a one-line verdict that is echoed at the end of the run."""
    def record(label, passed, detail):
        verdict = "INFO" if passed is None else "PASS" if passed else "FAIL"
        _LINES.append(f"[{verdict}] {label}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
