import numpy as np
import pytest

from helpers import seeded_state3


@pytest.fixture
def state3():
    return seeded_state3()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
