import numpy as np
import pytest

from wqed import EmitterParams, FrequencyGrid, GaussianPulseSpec, build_grid, gaussian_pulse

_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one acceptance line; the lines are repeated in the terminal summary."""

    def _record(criterion, ok, detail):
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def lossless():
    return EmitterParams(0.0, 1.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260514)


def pulse_on(grid: FrequencyGrid, sigma: float, carrier: float = 0.0):
    return gaussian_pulse(GaussianPulseSpec(carrier, sigma), grid)


@pytest.fixture
def converged_grid() -> FrequencyGrid:
    """Two-photon grid on which unitarity holds to 1e-6 for sigma = 0.36."""
    return build_grid(0.0, 48.0, 2049)
