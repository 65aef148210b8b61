import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

_DETAILS = {}
_OUTCOMES = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


@pytest.fixture
def acceptance():
    """``acceptance(n, ok, detail)`` records the outcome of criterion ``n``."""
    def record(n, ok, detail):
        _DETAILS[n] = (bool(ok), detail)
        return ok
    return record


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES[n] = _OUTCOMES.get(n, True) and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        ok = _OUTCOMES[n] and _DETAILS.get(n, (False,))[0]
        detail = _DETAILS.get(n, (False, "did not report"))[1]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
