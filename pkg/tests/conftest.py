import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    entry = _CRITERIA.setdefault(num, {"title": title, "status": "PASS", "detail": ""})
    if rep.skipped and entry["status"] == "PASS":
        entry["status"] = "SKIP"
        entry["detail"] = str(rep.longrepr[-1]) if isinstance(rep.longrepr, tuple) else ""
    elif rep.failed:
        entry["status"] = "FAIL"
        entry["detail"] = rep.longreprtext.strip().splitlines()[-1] if rep.longreprtext else ""


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        line = f"criterion {num}: {e['status']:4s}  {e['title']}"
        if e["status"] != "PASS" and e["detail"]:
            line += f"  ({e['detail']})"
        terminalreporter.write_line(line)
