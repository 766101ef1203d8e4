import json
import os
import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE = []
# nodeid -> {"outcome": ..., "examples": passing hypothesis examples}
PROPERTY_RESULTS = {}
DUMP_ENV = "WGDESIGN_PROPERTY_DUMP"


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, passed, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return passed
    return record


def pytest_collection_modifyitems(items):
    # the acceptance suite summarises property results, so it runs last
    items.sort(key=lambda it: it.path.name == "test_acceptance.py")


def _passing_examples(text):
    return sum(int(n) for n in re.findall(r"(\d+) passing examples", text))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not getattr(item.obj, "is_hypothesis_test", False):
        return
    if item.path.name == "test_acceptance.py":
        return
    stats = getattr(item, "hypothesis_statistics", "")
    PROPERTY_RESULTS[item.nodeid] = {"outcome": report.outcome,
                                     "examples": _passing_examples(stats)}


def pytest_sessionfinish(session):
    dump = os.environ.get(DUMP_ENV)
    if dump:
        Path(dump).write_text(json.dumps(PROPERTY_RESULTS, indent=1))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
