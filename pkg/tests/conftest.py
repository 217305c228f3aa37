import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oligoshare.data_impact import CostModel, FirmProfile

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def firms(sizes, a=0.1, b=0.1, beta=1.0, cap=0.2):
    model = CostModel(a, b, beta, cap)
    return [FirmProfile(i, int(n), model) for i, n in enumerate(sizes)]


def random_feasible_costs(rng, m, gamma, check):
    """Draw cost vectors until ``check`` accepts one."""
    while True:
        c = rng.uniform(0.0, 0.6, size=m)
        if check(c):
            return c


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
