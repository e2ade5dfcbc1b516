import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gmrfinfo import make_neighborhood  # noqa: E402

F0 = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]

_ACCEPTANCE = {}


@pytest.fixture
def f0():
    return np.array(F0)


@pytest.fixture
def cross():
    return make_neighborhood(1)


@pytest.fixture
def square():
    return make_neighborhood(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record a one-line detail string for an acceptance criterion."""
    def record(detail):
        _ACCEPTANCE.setdefault(request.node.nodeid, {})["detail"] = detail
        print(detail)
    return record


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    entry = _ACCEPTANCE.setdefault(report.nodeid, {})
    if report.when == "call" or report.failed:
        entry["passed"] = report.passed and entry.get("passed", True)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE, key=_criterion_number):
        entry = _ACCEPTANCE[nodeid]
        if "passed" not in entry:
            continue
        name = nodeid.split("::")[-1]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {entry.get('detail', '')}")


def _criterion_number(nodeid):
    name = nodeid.split("::")[-1]
    digits = "".join(ch for ch in name.split("_")[1] if ch.isdigit()) if "_" in name else ""
    return int(digits) if digits else 0
