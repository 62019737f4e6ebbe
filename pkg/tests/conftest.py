import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, scale=1.0):
    a = rng.uniform(-1.0, 1.0, size=(2, 2))
    return scale * (a @ a.T) + 0.05 * np.eye(2)
