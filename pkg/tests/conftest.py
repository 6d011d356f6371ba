import pytest

_LINES = []


@pytest.fixture
def report():
    """Record a one-line verdict shown in the terminal summary."""
    def add(criterion, ok, detail):
        _LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(_LINES[-1])
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
