import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

from shtukalab.base_arith import FieldTower, RamifiedBase  # noqa: E402


@pytest.fixture(scope="session")
def T2():
    return FieldTower.for_q(2)


@pytest.fixture(scope="session")
def T3():
    return FieldTower.for_q(3)


@pytest.fixture(scope="session")
def B2(T2):
    return RamifiedBase(T2, 1, D=1, P=40)


@pytest.fixture(scope="session")
def B3(T3):
    return RamifiedBase(T3, 1, D=1, P=30)


# --- acceptance criteria summary -------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion number k")


def pytest_runtest_logreport(report):
    mark = getattr(report, "criterion", None)
    if mark is None:
        return
    k, title = mark
    ok = report.passed if report.when == "call" else not report.failed
    prev = _criteria.get(k, (title, True))
    _criteria[k] = (title, prev[1] and ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        title, ok = _criteria[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {title}")
