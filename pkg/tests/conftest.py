import pytest

from amencert.groups import _GROUP_CACHE


@pytest.fixture(autouse=True)
def _default_size_guard(monkeypatch):
    monkeypatch.delenv("AMENCERT_SIZE_GUARD", raising=False)
    yield
    # balls cached under a tiny guard must not leak into other tests
    for g in _GROUP_CACHE.values():
        g._balls.clear()


_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and report.passed:
        return
    cid, text = mark.args
    previous = _CRITERIA.get(cid, (text, "PASS"))[1]
    status = "PASS" if report.passed and previous == "PASS" else "FAIL"
    _CRITERIA[cid] = (text, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        text, status = _CRITERIA[cid]
        terminalreporter.write_line(f"{cid} {status}: {text}")
