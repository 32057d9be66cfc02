import pytest

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    _ACCEPTANCE[mark.args[0]] = (mark.args[1], report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, detail = _ACCEPTANCE[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{verdict}] {number}. {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
