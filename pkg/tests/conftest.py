"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            status = "FAIL (expected)" if report.outcome == "skipped" else "PASS (unexpected)"
        else:
            status = "PASS" if report.outcome == "passed" else "FAIL"
        _RESULTS[label] = (status, getattr(item, "acceptance_note", ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS):
        status, note = _RESULTS[label]
        line = f"{status:<17} {label}"
        if note:
            line += f"  [{note}]"
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a short measurement to the acceptance summary line."""

    def record(text):
        request.node.acceptance_note = text

    return record
