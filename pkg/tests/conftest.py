import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_runtest_logreport(report):
    """Remember the outcome of each acceptance criterion for the summary."""
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        number = int(name.split("_")[2])
        _CRITERIA.setdefault(number, []).append((report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        detail = "; ".join(d for _, d in parts if d)
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}".rstrip())
