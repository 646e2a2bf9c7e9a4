"""Shared test fixtures and hypothesis settings."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coopdgnss.geometry import load_fixture
from coopdgnss.netmodel import NetworkSpec

# The numba-compiled search path warms up lazily; per-example deadlines
# would misattribute that cost to whichever example triggers it.
settings.register_profile(
    "coopdgnss",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("coopdgnss")


def spd(rng: np.random.Generator, n: int, spread: float = 1.0) -> np.ndarray:
    """Random symmetric positive-definite matrix, comfortably conditioned."""
    A = rng.standard_normal((n, n)) * spread
    return A @ A.T + n * spread**2 * np.eye(n)


@pytest.fixture(scope="session")
def k23():
    return load_fixture("k23_gdop2p5")


@pytest.fixture(scope="session")
def k8():
    return load_fixture("k8_gdop2p97")


@pytest.fixture
def small_spec():
    """Two users (one constrained, one aiding), six satellites."""
    return NetworkSpec(
        N_c=1, N_o=1, K_c=4, K_o=2,
        alpha=0.7, sigma_rho=1.0, sigma_phi=0.01, wavelength=0.19,
    )
