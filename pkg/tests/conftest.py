import re

import pytest

_results: dict[str, list[tuple[str, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)_", item.name)
    if not m:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _results.setdefault(m.group(1), []).append((status, doc))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=int):
        runs = _results[key]
        status = "PASS" if all(s == "PASS" for s, _ in runs) else "FAIL"
        terminalreporter.write_line(f"criterion {int(key):2d}: {status}  {runs[0][1]}")
