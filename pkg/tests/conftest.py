import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    state = _CRITERIA.setdefault(number, {"title": title, "status": "PASS", "detail": ""})
    if rep.skipped and state["status"] == "PASS":
        state["status"] = "SKIP"
        state["detail"] = str(rep.longrepr[2]) if isinstance(rep.longrepr, tuple) else ""
    elif rep.failed:
        state["status"] = "FAIL"
        state["detail"] = rep.longreprtext.strip().splitlines()[-1] if rep.longreprtext else ""
    elif rep.when == "call" and state["status"] == "PASS":
        measured = [str(v) for k, v in item.user_properties if k == "measured"]
        if measured:
            state["detail"] = "; ".join(filter(None, [state["detail"], *measured]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        state = _CRITERIA[number]
        line = f"criterion {number:>2} {state['status']:<4} {state['title']}"
        if state["detail"]:
            line += f"  ({state['detail']})"
        terminalreporter.write_line(line)
