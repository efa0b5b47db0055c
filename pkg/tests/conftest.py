from __future__ import annotations

import re

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m or (report.when != "call" and report.passed):
        return
    n = int(m.group(1))
    ok = _ACCEPTANCE.get(n, (True, ""))[0] and report.passed
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE[n] = (ok, detail or _ACCEPTANCE.get(n, (True, ""))[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else ""))
