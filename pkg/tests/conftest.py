import numpy as np
import pytest

from ultracarl.domain import Ball, Box, DomainModel
from ultracarl.geometry import Signature, origin
from ultracarl.weight import CarlemanParams


@pytest.fixture
def sig12():
    return Signature(1, 2)


@pytest.fixture
def unit_disc(sig12):
    return DomainModel(sig12, 2.0, Ball([0.0, 0.0], 1.0))


@pytest.fixture
def growing_disc(sig12):
    """Radius 1 + 0.1 t1, long enough in time for p = (0, (2, 0))."""
    return DomainModel(sig12, 4.0, Ball([0.0, 0.0], 1.0, radius_profile=[1.0, 0.1]))


@pytest.fixture
def centre_params(sig12):
    return CarlemanParams.from_delta(origin(sig12), 9.0, 0.1, 1.0)


def fd_gradient(fn, y, h):
    """Fourth-order central differences of a vectorised scalar function."""
    g = np.empty_like(y)
    for j in range(y.shape[-1]):
        e = np.zeros_like(y)
        e[..., j] = h
        g[..., j] = (-fn(y + 2 * e) + 8 * fn(y + e) - 8 * fn(y - e) + fn(y - 2 * e)) / (12 * h)
    return g
