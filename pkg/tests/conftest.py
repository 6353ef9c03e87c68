import pytest

_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, passed, detail)``."""

    def _report(number, passed, detail):
        _CRITERIA.append((number, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}")
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}")
