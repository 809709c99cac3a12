import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Recorder for one pass/fail line per acceptance criterion; the lines
    are echoed in the terminal summary."""

    def record(criterion, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        suffix = f": {detail}" if detail else ""
        _ACCEPTANCE_LINES.append(f"criterion {criterion:>2} {status}{suffix}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
