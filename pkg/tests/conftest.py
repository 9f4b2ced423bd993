import os

import pytest
from hypothesis import HealthCheck, settings

from pfsl.synthesis import prototype
from pfsl.sweep import extract_pth, power_sweep
from pfsl.units import dbm_to_w

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {detail}")


@pytest.fixture(scope="session")
def proto():
    return prototype()


@pytest.fixture(scope="session")
def tuned():
    return prototype().scaled_zb(0.95)


@pytest.fixture(scope="session")
def tuned_trace(tuned):
    return power_sweep(tuned.netlist(), tuned.design.f_in_opt, dbm_to_w(-10.0), dbm_to_w(28.0), 1.0)


@pytest.fixture(scope="session")
def tuned_pth(tuned_trace):
    return extract_pth(tuned_trace)
