import pytest

from necklab.geometry import BoundaryProfile
from necklab.sweep import SweepConfig, run_anisotropic_sweep, run_sweep


@pytest.fixture(scope="session")
def quad3_report():
    return run_sweep(SweepConfig(n=3, profile=BoundaryProfile.quadratic(0.5, -0.5)))


@pytest.fixture(scope="session")
def n2_report():
    return run_sweep(SweepConfig(n=2, profile=BoundaryProfile.quadratic(0.5, -0.5)))


@pytest.fixture(scope="session")
def flat_report():
    return run_sweep(SweepConfig(n=3, profile=BoundaryProfile.flat()))


@pytest.fixture(scope="session")
def aniso_report():
    return run_anisotropic_sweep(
        SweepConfig(n=3, profile=BoundaryProfile.anisotropic((2.0, 1.0))))
