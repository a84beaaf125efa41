import re

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)_(\w+)", item.name)
    if not m or item.module.__name__.split(".")[-1] != "test_acceptance":
        return
    n = int(m.group(1))
    title = m.group(2).replace("_", " ")
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _RESULTS[n] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        status, title = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
