from __future__ import annotations

import re

import pytest

_CRITERION = re.compile(r"test_(A\d+)_")
_results: dict[str, dict] = {}


def _criterion(nodeid: str) -> str | None:
    m = _CRITERION.search(nodeid)
    return m.group(1) if m else None


def pytest_runtest_logreport(report):
    crit = _criterion(report.nodeid)
    if crit is None or (report.when != "call" and report.passed):
        return
    entry = _results.setdefault(crit, {"passed": True, "details": []})
    if report.failed:
        entry["passed"] = False
    if report.when == "call":
        entry["details"] += [str(v) for k, v in report.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_results, key=lambda c: int(c[1:])):
        entry = _results[crit]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"{crit} {status}" + (f": {detail}" if detail else ""))


@pytest.fixture
def detail(record_property):
    """Attach a one-line measurement to the acceptance summary."""

    def add(text: str) -> None:
        record_property("detail", text)

    return add
