import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one of the numbered acceptance criteria")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "passed": True, "detail": []})
    entry["passed"] &= rep.passed
    entry["detail"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[number]
        status = "PASS" if e["passed"] else "FAIL"
        detail = "; ".join(e["detail"])
        tr.write_line(f"[{status}] criterion {number}: {e['title']}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def detail(record_property):
    """Attach a short human-readable measurement to the acceptance summary line."""

    def add(text: str):
        record_property("detail", text)

    return add


@pytest.fixture
def unit_circle():
    from manifold_extremes.geometry import make_builtin

    return make_builtin("circle", radius=1.0)


TWO_PI = 2 * math.pi
