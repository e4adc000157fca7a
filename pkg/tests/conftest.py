import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="run the long-running benchmark tiers")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="extended tier; run with --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


_CRITERIA: dict[str, int] = {}
_OUTCOMES: dict[int, list[str]] = {}


def pytest_collection_finish(session):
    for item in session.items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _CRITERIA[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    k = _CRITERIA.get(report.nodeid)
    if k is None:
        return
    if report.failed:
        _OUTCOMES.setdefault(k, []).append("failed")
    elif report.skipped:
        _OUTCOMES.setdefault(k, []).append("skipped")
    elif report.when == "call":
        _OUTCOMES.setdefault(k, []).append("passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(set(_CRITERIA.values())):
        seen = _OUTCOMES.get(k, [])
        skipped = seen.count("skipped")
        if "failed" in seen:
            line = "FAIL"
        elif "passed" in seen:
            line = "PASS"
        else:
            line = "NOT RUN"
        if skipped:
            line += f" ({skipped} extended part{'s' if skipped > 1 else ''} not run)"
        terminalreporter.write_line(f"criterion {k}: {line}")
