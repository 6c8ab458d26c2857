import pytest
from hypothesis import HealthCheck, settings

from djwave.background import build_profile
from djwave.presets import preset

settings.register_profile("solver", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("solver")


@pytest.fixture(scope="session")
def irrotational():
    return build_profile(preset("irrotational"), 64)


@pytest.fixture(scope="session")
def two_layer():
    return build_profile(preset("two-layer"), 64)


@pytest.fixture(scope="session")
def three_layer():
    return build_profile(preset("three-layer"), 64)


@pytest.fixture(scope="session", params=["irrotational", "two-layer"])
def profile(request):
    return build_profile(preset(request.param), 64)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import CRITERIA

    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
