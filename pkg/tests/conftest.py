import numpy as np
import pytest
from hypothesis import settings

from qlstab.hypergraph import NeighborhoodStructure, chain


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain3():
    return chain(3)


@pytest.fixture
def chain4():
    return chain(4)


@pytest.fixture
def star7():
    # three neighborhoods meeting in subsystem 6
    return NeighborhoodStructure([2] * 7, [(0, 1, 6), (2, 3, 6), (4, 5, 6)])


settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")
