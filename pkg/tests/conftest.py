import numpy as np
import pytest

from fieldlab.sources import (
    GaussianChargeSource,
    HertzianDipoleSource,
    RotatingPolarizationSource,
)

# Class defaults leave omega at 1.0; every oracle below assumes the unit
# wavelength, so the frequency is always passed explicitly.
OMEGA_DIP = 2.0 * np.pi


@pytest.fixture(scope="session")
def dipole():
    return HertzianDipoleSource(omega=OMEGA_DIP)


@pytest.fixture(scope="session")
def rotating():
    """Superluminal pattern: m=5 at omega=1.5 puts the phase speed at 7.5c."""
    return RotatingPolarizationSource(m=5, omega=1.5, r_min=0.6, r_max=1.0,
                                      z_half=0.25)


@pytest.fixture(scope="session")
def blob():
    # sigma=1 keeps the whole support well inside a radius-10 probe sphere
    return GaussianChargeSource(q=1.0, sigma=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def steady_probe_time(src, r, phase=0.2):
    """A time safely past the ramp at radius r, off any exact zero crossing."""
    period = src.field_period() or 0.0
    return src.steady_time(float(r)) + phase * period


# One verdict line per acceptance criterion, appended by test_acceptance.py
# and printed as a block after the test summary (plain prints get captured).
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
