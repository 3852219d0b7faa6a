"""Per-criterion PASS/FAIL summary for tests marked ``criterion``."""

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            _results.setdefault(num, {"title": title, "ok": True, "ran": False})
            item.user_properties.append(("criterion", num))


def pytest_runtest_logreport(report):
    num = dict(report.user_properties).get("criterion")
    if num is None:
        return
    entry = _results[num]
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        entry = _results[num]
        status = ("PASS" if entry["ok"] else "FAIL") if entry["ran"] else "NOT RUN"
        terminalreporter.write_line(f"criterion {num}: {status}  {entry['title']}")
