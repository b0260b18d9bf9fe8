import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhdsim.grid import AngularFrequencyQuadrature, FluidState, PhysicalParams, SpatialGrid, validate_parameters


def test_strict_blowup_constraint_passes_below_three_mu():
    rep = validate_parameters(PhysicalParams(mu=1, lam=2), strict_blowup=True)
    assert rep.ok


def test_strict_blowup_constraint_fails_at_lambda_four():
    rep = validate_parameters(PhysicalParams(mu=1, lam=4), strict_blowup=True)
    assert not rep.ok
    assert "lambda < 3 mu" in rep.failures()[0]


def test_bulk_viscosity_constraint():
    rep = validate_parameters(PhysicalParams(mu=1, lam=-1))
    assert not rep["3*lambda + 2*mu >= 0"].passed


def test_gamma_consistency_is_checked():
    assert not validate_parameters(PhysicalParams(gamma=1.5)).ok
    assert validate_parameters(PhysicalParams()).ok


def test_grid_basic_geometry():
    g = SpatialGrid((8, 4), (2.0, 1.0))
    assert g.dim == 2 and g.size == 32
    assert g.spacing == (0.25, 0.25)
    assert g.cell_volume == pytest.approx(1 / 16)
    assert g.refined().cells == (16, 8)
    x, y = g.mesh()
    assert x[0, 0] == pytest.approx(0.125)


def test_grid_rejects_too_few_cells_and_too_many():
    with pytest.raises(ValueError):
        SpatialGrid((3,), (1.0,))
    with pytest.raises(ValueError):
        SpatialGrid((64, 64), (1.0, 1.0), max_cells=1000)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(4, 40), min_size=1, max_size=3), st.floats(0.1, 10))
def test_spacing_times_cells_is_length(cells, L):
    g = SpatialGrid(tuple(cells), (L,) * len(cells))
    for n, h in zip(cells, g.spacing):
        assert n * h == pytest.approx(L)


@pytest.mark.parametrize("n_polar,n_azimuth,n_groups", [(2, 4, 1), (4, 8, 3), (1, 2, 2)])
def test_quadrature_invariants(n_polar, n_azimuth, n_groups):
    q = AngularFrequencyQuadrature.build(n_polar, n_azimuth, n_groups)
    assert np.allclose(np.linalg.norm(q.ordinates, axis=1), 1.0, atol=1e-14)
    assert q.ang_weights.sum() == pytest.approx(4 * np.pi, rel=1e-12)
    assert np.allclose(q.ang_weights @ q.ordinates, 0.0, atol=1e-12)
    assert np.all(np.diff(q.freq_nodes) > 0)
    assert q.weights.shape == (n_groups, n_polar * n_azimuth)


def test_fluid_state_checks_shapes_and_freezes_arrays():
    with pytest.raises(ValueError):
        FluidState(np.ones(4), np.zeros((2, 4)), np.ones(4))
    s = FluidState(np.ones(4), np.zeros((3, 4)), np.ones(4))
    with pytest.raises(ValueError):
        s.rho[0] = 2.0
    assert s.replace(time=1.5).time == 1.5
