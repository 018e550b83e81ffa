import pytest

_RESULTS = {}  # criterion number -> (title, [outcomes])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _RESULTS.setdefault(number, (title, []))[1].append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcomes = _RESULTS[number]
        ok = all(o == "passed" for _, o in outcomes)
        failed = [name for name, o in outcomes if o != "passed"]
        detail = "" if ok else f"  ({', '.join(failed)})"
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}{detail}")
