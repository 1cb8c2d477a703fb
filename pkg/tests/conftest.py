import numpy as np
import pytest

from SpatialFDR.lattice_grid import Lattice, NeighborhoodSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def uniform_p(rng):
    """20x20 lattice of uniform p-values."""
    return Lattice((20, 20), rng.random(400))


@pytest.fixture
def cross5():
    return NeighborhoodSpec("cross2d5")


@pytest.fixture
def four_pstar():
    return Lattice((2, 2), [0.2, 0.4, 0.6, 0.8])
