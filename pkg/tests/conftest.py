import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from constmap import kernels

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(params=sorted(kernels.implementations()))
def impl(request):
    """Each available kernel backend in turn."""
    return kernels.implementations()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
