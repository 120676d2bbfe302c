import pytest

from svdyn import _backend

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance line: ``record_criterion(number, passed, detail)``."""

    def record(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)

    return record


@pytest.fixture(params=sorted(_backend.available_backends()))
def backend(request):
    return _backend.available_backends()[request.param]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
