import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sgcs_order.ordering import ProbeGrid

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance criteria append (number, passed, detail) here
ACCEPTANCE_LINES = []


@pytest.fixture
def small_grid():
    return ProbeGrid.log_spaced(1e-3, 20.0, 30, r_points_per_q=120, r_max_factor=50.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
