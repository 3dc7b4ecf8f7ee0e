import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Collect one pass/fail line per acceptance criterion for the terminal summary."""

    def _record(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
