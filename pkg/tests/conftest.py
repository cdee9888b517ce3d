from __future__ import annotations

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name): marks a test as an acceptance criterion; a summary "
        "line 'ACCEPTANCE: <name>: PASS/FAIL' is printed for each one",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    name = marker.kwargs.get("name") or (marker.args[0] if marker.args else item.name)
    status = "PASS" if report.passed else "FAIL"
    capman = item.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(f"\nACCEPTANCE: {name}: {status}")
    else:
        print(f"\nACCEPTANCE: {name}: {status}")
