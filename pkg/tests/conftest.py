import time
from contextlib import contextmanager

import pytest

_VERDICTS = {}


@pytest.fixture
def criterion():
    """Record the outcome of the enclosed block as one acceptance verdict."""

    @contextmanager
    def record(number, title):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            note = str(exc).splitlines()[0][:120] if str(exc) else type(exc).__name__
            _VERDICTS[number] = ("FAIL", title, time.perf_counter() - start, note)
            raise
        _VERDICTS[number] = ("PASS", title, time.perf_counter() - start, "")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        verdict, title, seconds, note = _VERDICTS[number]
        line = f"criterion {number:>2}: {verdict}  {title} ({seconds:.2f}s)"
        if note:
            line += f"  -- {note}"
        terminalreporter.write_line(line)
