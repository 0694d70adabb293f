"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_CRITERIA = {}  # number -> {"title", "outcome", "details"}
_NODE_TO_CRITERION = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is None:
            continue
        number, title = mark.args
        _NODE_TO_CRITERION[item.nodeid] = number
        _CRITERIA.setdefault(number, {"title": title, "outcome": "PASS", "details": [], "ran": False})


def pytest_runtest_logreport(report):
    number = _NODE_TO_CRITERION.get(report.nodeid)
    if number is None:
        return
    entry = _CRITERIA[number]
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.skipped and entry["outcome"] == "PASS":
        entry["outcome"] = "SKIP"
    if report.when == "call":
        entry["ran"] = True
        entry["details"].extend(str(v) for k, v in report.user_properties if k == "measured")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcome = entry["outcome"] if entry["ran"] or entry["outcome"] != "PASS" else "NOT RUN"
        line = f"criterion {number}: {outcome:4s} {entry['title']}"
        if entry["details"]:
            line += " [" + "; ".join(entry["details"]) + "]"
        terminalreporter.write_line(line)


@pytest.fixture
def measured(record_property):
    """Attach a measured value to the criterion summary line."""

    def record(text):
        record_property("measured", text)
        print(text)

    return record
