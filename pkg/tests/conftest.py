import shutil

import pytest

HAVE_Z3 = shutil.which("z3") is not None

needs_z3 = pytest.mark.skipif(not HAVE_Z3, reason="z3 binary not on PATH")


# one pass/fail line per acceptance criterion, aggregated over its tests
_CRITERIA = {}
_OUTCOMES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _CRITERIA[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    key = _CRITERIA.get(report.nodeid)
    if key is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES.setdefault(key, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), outs in sorted(_OUTCOMES.items()):
        if "failed" in outs:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outs):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        bad = sum(o == "failed" for o in outs)
        note = f" ({bad}/{len(outs)} checks failed)" if bad else ""
        terminalreporter.write_line(f"criterion {n} {title}: {verdict}{note}")
