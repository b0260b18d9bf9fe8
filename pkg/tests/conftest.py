import numpy as np
import pytest

from rhdsim import radiation as rad
from rhdsim.grid import AngularFrequencyQuadrature, PhysicalParams, SpatialGrid


@pytest.fixture
def quad():
    return AngularFrequencyQuadrature.build(2, 4, 1)


@pytest.fixture
def grid1d():
    return SpatialGrid((32,), (1.0,))


@pytest.fixture
def params():
    return PhysicalParams()


def make_setup(grid, quad, coeffs=None, c=10.0):
    return rad.RadiationSetup(grid, quad, coeffs if coeffs is not None else rad.constant_model(1.0), c)


def uniform_emission(value):
    def emission(v, t, mesh):
        return np.full((len(v),) + mesh[0].shape, float(value))

    return emission
