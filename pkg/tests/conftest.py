import os

import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion's outcome for the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        _RESULTS[number] = (bool(ok), detail)
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_configure(config):
    os.environ.setdefault("HYPOTHESIS_PROFILE", "default")
