import pytest

_LINES = []


@pytest.fixture(scope="session")
def record():
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def _record(number, title, passed, detail=""):
        _LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title}"
                      + (f"  [{detail}]" if detail else ""))
        print(_LINES[-1])
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
