import sys

import numpy as np
import pytest

from adia_check import Counterexample, RotatingField, TimeGrid, propagate_model

OMEGA0 = 1.0
TAU = 20 * np.pi  # omega0 * tau = 20 pi, omega0 * tau / 2 a multiple of 2 pi


@pytest.fixture(scope="session")
def counterexample():
    return Counterexample(OMEGA0, TAU)


@pytest.fixture(scope="session")
def rotating():
    return RotatingField(OMEGA0, TAU)


@pytest.fixture(scope="session")
def ce_half(counterexample):
    """Counterexample trajectory over [0, tau/2], 4000 steps."""
    return propagate_model(counterexample, TimeGrid(0.0, TAU / 2, 4000))


@pytest.fixture(scope="session")
def ce_full(counterexample):
    """Counterexample trajectory over [0, tau], 4000 steps."""
    return propagate_model(counterexample, TimeGrid(0.0, TAU, 4000))


@pytest.fixture(scope="session")
def rf_half(rotating):
    return propagate_model(rotating, TimeGrid(0.0, TAU / 2, 4000))


def random_phases(rng, n):
    return np.exp(1j * rng.uniform(-np.pi, np.pi, size=n))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
