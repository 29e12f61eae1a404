import numpy as np
import pytest

from mmwsim.config import SystemConfig
from mmwsim.mathkit import RngStream


@pytest.fixture
def rng():
    return RngStream(12345).generator()


@pytest.fixture
def small_config():
    return SystemConfig(drops=4, users=3)


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@pytest.fixture(scope="session")
def default_campaign():
    """The full default campaign (1000 drops, all models), run serially once per session."""
    from mmwsim.montecarlo import run_campaign

    return run_campaign(SystemConfig(), workers=1)
