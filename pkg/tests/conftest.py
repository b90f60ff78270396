import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from capjet.grid import make_grid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def grid32():
    return make_grid(np.pi, 32)


@pytest.fixture
def grid64():
    return make_grid(np.pi, 64)
