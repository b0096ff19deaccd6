import numpy as np
import pytest
from hypothesis import settings

from fluxqnd.readout import Mechanism, ReadoutScenario

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(key: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[key] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k.split(".")[0]), k)):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:6s} {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def unit_scenario():
    """Kappa = 1 readout scenario factory."""

    def make(mechanism="ideal", chi=0.5, eps=0.5, kerr=0.0, **kw):
        mech = Mechanism(mechanism)
        if mech is Mechanism.IDC:
            kw.setdefault("lam", 0.1)
        return ReadoutScenario(mech, chi_z=chi, kappa=1.0, drive_amplitude=eps, kerr=kerr, **kw)

    return make


def rel(a, b):
    return abs(a - b) / abs(b)


np.seterr(all="ignore")
