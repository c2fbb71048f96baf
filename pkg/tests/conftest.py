import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary: one PASS/FAIL/SKIP line per criterion -------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion the test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label = str(mark.args[0])
    detail = dict(item.user_properties).get("detail", "")
    if rep.skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        _CRITERIA[label] = ("SKIP", reason.removeprefix("Skipped: "))
    elif rep.when == "call":
        _CRITERIA[label] = ("PASS" if rep.passed else "FAIL", detail)
    elif rep.failed:
        _CRITERIA[label] = ("FAIL", f"error in {rep.when}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: (int(s.split()[0]), s)):
        status, detail = _CRITERIA[label]
        terminalreporter.write_line(f"criterion {label}: {status}  {detail}".rstrip())
