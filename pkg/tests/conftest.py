"""Shared pytest configuration.

Tests marked ``criterion(k, label)`` are acceptance criteria; one PASS/FAIL
line per criterion is printed at the end of the session, with any notes the
test attached through ``record_property("note", ...)``.
"""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, label): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    k, label = mark.args
    entry = _RESULTS.setdefault(k, {"label": label, "ok": True, "ran": False, "notes": []})
    if rep.when == "call" or rep.failed:
        entry["ran"] = entry["ran"] or rep.when == "call"
        entry["ok"] = entry["ok"] and not rep.failed and not rep.skipped
        if rep.when == "call":
            entry["notes"] += [str(v) for name, v in item.user_properties if name == "note"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        e = _RESULTS[k]
        status = ("PASS" if e["ok"] else "FAIL") if e["ran"] else "NOT RUN"
        note = f"  [{'; '.join(e['notes'])}]" if e["notes"] else ""
        terminalreporter.write_line(f"criterion {k:>2} {e['label']}: {status}{note}")
