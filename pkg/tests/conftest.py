"""Shared pytest plumbing: the acceptance-criterion marker and its summary.

Tests tagged @pytest.mark.criterion(n, title) are aggregated per criterion
number and reported as one PASS/FAIL line each after the run, so the
acceptance status is readable without grepping the dotted output.
"""

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, title): numbered acceptance criterion this test verifies",
    )
    config._criterion_outcomes = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    agg = item.config._criterion_outcomes.setdefault(
        num, {"title": title, "passed": 0, "failed": 0, "skipped": 0}
    )
    # a fixture blowing up in setup must count as a criterion failure, so
    # every phase's outcome is folded in, not just the call phase
    if report.failed:
        agg["failed"] += 1
    elif report.skipped:
        agg["skipped"] += 1
    elif report.when == "call":
        agg["passed"] += 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = getattr(config, "_criterion_outcomes", None)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(outcomes):
        agg = outcomes[num]
        if agg["failed"]:
            word = "FAIL"
        elif agg["passed"]:
            word = "PASS"
        else:
            word = "SKIP"
        terminalreporter.write_line(f"criterion {num}: {word}  {agg['title']}")
