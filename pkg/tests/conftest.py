import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rrdlab.sampler import sample_rrd

settings.register_profile(
    "rrdlab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("rrdlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_regular(n, d, seed):
    return sample_rrd(n, d, seed)
