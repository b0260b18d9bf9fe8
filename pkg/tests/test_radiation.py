import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from rhdsim import radiation as rad
from rhdsim.grid import AngularFrequencyQuadrature, SpatialGrid

from conftest import make_setup, uniform_emission


def test_isotropic_moments(quad, grid1d):
    I = np.full((1, quad.n_ordinates, 32), 2.0)
    m = rad.radiation_moments(I, quad, 10.0)
    assert np.allclose(m.E_r, 2.0 * quad.total_weight / 10.0)
    assert np.allclose(m.F_r, 0.0, atol=1e-13)
    assert np.allclose(m.P_r[0, 0] + m.P_r[1, 1] + m.P_r[2, 2], m.E_r)


def test_single_ordinate_flux(quad):
    I = np.zeros((1, quad.n_ordinates, 4))
    I[0, 3] = 1.5
    m = rad.radiation_moments(I, quad, 2.0)
    assert np.allclose(m.F_r.T, 1.5 * quad.weights[0, 3] * quad.ordinates[3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_moment_trace_identity(seed, groups):
    q = AngularFrequencyQuadrature.build(2, 4, groups)
    I = np.random.default_rng(seed).uniform(0, 3, size=(groups, q.n_ordinates, 5))
    m = rad.radiation_moments(I, q, 3.0)
    assert np.allclose(np.trace(m.P_r), m.E_r, rtol=1e-12)
    assert np.allclose(m.P_r, m.P_r.transpose(1, 0, 2))


def test_collision_reduces_to_emission_minus_absorption(quad, grid1d):
    setup = make_setup(grid1d, quad, rad.constant_model(2.0, emission=uniform_emission(0.7)))
    I = np.full((1, quad.n_ordinates, 32), 0.5)
    rho = np.full(32, 3.0)
    A = rad.collision_term(I, rho, np.ones(32), setup)
    assert np.allclose(A, 0.7 - 2.0 * 3.0 * 0.5)


def test_elastic_scattering_balances_on_isotropic_field(quad, grid1d):
    setup = make_setup(grid1d, quad, rad.constant_model(0.0, scattering=0.4))
    I = np.full((1, quad.n_ordinates, 32), 1.3)
    A = rad.collision_term(I, np.full(32, 2.0), np.ones(32), setup)
    assert np.allclose(A, 0.0, atol=1e-13)


def test_radiation_force_on_a_beam_points_along_the_beam(quad, grid1d):
    c = 5.0
    setup = make_setup(grid1d, quad, rad.constant_model(1.0), c)
    m = 2
    I = np.zeros((1, quad.n_ordinates, 32))
    I[0, m] = 4.0
    f = rad.radiation_force(I, np.ones(32), np.ones(32), setup)
    expected = quad.weights[0, m] * 4.0 * quad.ordinates[m] / c
    assert np.allclose(f.T, expected)


def test_isotropic_heating_at_rest(quad, grid1d):
    setup = make_setup(grid1d, quad, rad.constant_model(1.5))
    I = np.full((1, quad.n_ordinates, 32), 2.0)
    N = rad.radiation_heating(I, np.ones(32), np.ones(32), np.zeros((3, 32)), setup)
    assert np.allclose(N, -1.5 * 2.0 * quad.total_weight)


def test_compton_peak_value_and_temperature_derivative():
    model = rad.compton_model(D1=2.0, D2=3.0, v0=1.3)
    assert model.sigma_v_theta(1.3, 1.0) == pytest.approx(2.0)
    q = AngularFrequencyQuadrature.product(2, 4, [1.3, 2.0], [0.5, 0.5])
    th = np.array([1.0, 0.7])
    d = model.sigma_theta(q, th)
    assert d[0, 0, 0] == pytest.approx(-1.0)  # -D1/2 at v = v0, theta = 1
    eps = 1e-6
    fd = (model.sigma(q, None, th + eps) - model.sigma(q, None, th - eps)) / (2 * eps)
    assert np.allclose(d, fd, rtol=1e-6)


def test_compton_rejects_nonpositive_parameters():
    with pytest.raises(ValueError):
        rad.compton_model(D1=0.0, D2=1.0, v0=1.0)


def test_negative_emission_is_rejected(quad, grid1d):
    setup = make_setup(grid1d, quad, rad.constant_model(1.0, emission=uniform_emission(-1.0)))
    with pytest.raises(rad.CoefficientError):
        rad.collision_term(np.zeros((1, quad.n_ordinates, 32)), np.ones(32), np.ones(32), setup)


def test_validate_coefficients_reports_bounds(quad):
    coeffs = rad.constant_model(1.0, scattering=0.25)
    rep = rad.validate_coefficients(coeffs, quad, alpha=100.0, beta=10.0)
    assert rep.ok
    assert rep.values["scatter_out_total_max"] == pytest.approx(0.25 * quad.total_weight)
    assert rep.values["sigma_Linf"] == pytest.approx(1.0)
    assert not rad.validate_coefficients(coeffs, quad, alpha=1e-3, beta=10.0).ok


# --- transport -------------------------------------------------------------


def _periodic_uniform(H0, F0, I0, c, dt, substeps=None, n=16):
    g = SpatialGrid((n,), (1.0,))
    q = AngularFrequencyQuadrature.build(2, 4, 1)
    shape = (1, q.n_ordinates, n)
    res = rad.sweep(np.full(shape, I0), np.full(shape, H0), np.full(shape, F0), g, q, c, dt, substeps,
                    periodic=True)
    return res


def test_uniform_attenuation_is_exponential():
    res = _periodic_uniform(H0=3.0, F0=0.0, I0=2.0, c=1.0, dt=0.02)
    assert np.allclose(res.intensity, 2.0 * np.exp(-1.0 * 3.0 * 0.02), rtol=1e-14)
    assert res.clamped == 0.0


def test_uniform_source_matches_ray_ode():
    H0, F0, I0, c = 2.0, 1.0, 0.3, 1.0
    errs = []
    for dt in (0.02, 0.01):
        res = _periodic_uniform(H0, F0, I0, c, dt)
        sol = solve_ivp(lambda t, y: c * (F0 - H0 * y), (0, dt), [I0], rtol=1e-12, atol=1e-14)
        errs.append(np.max(np.abs(res.intensity - sol.y[0, -1])))
    # one trapezoid step: local error O(dt^3)
    assert errs[0] < 5e-6
    assert errs[0] / errs[1] > 7.0


def test_zero_data_stays_zero_with_inflow_walls(quad, grid1d):
    shape = (1, quad.n_ordinates, 32)
    res = rad.sweep(np.zeros(shape), np.ones(shape), np.zeros(shape), grid1d, quad, 10.0, 0.01)
    assert np.all(res.intensity == 0)


def test_substep_count_and_cfl_error(grid1d):
    assert rad.substep_count(10.0, 0.01, grid1d, 0.9, "auto") == 4
    with pytest.raises(rad.TransportCFLError):
        rad.substep_count(10.0, 0.01, grid1d, 0.9, 1)


def test_workers_do_not_change_the_result():
    g = SpatialGrid((12, 10), (1.0, 1.0))
    q = AngularFrequencyQuadrature.build(2, 4, 2)
    rng = np.random.default_rng(7)
    shape = (2, q.n_ordinates) + g.shape
    I, H, F = rng.uniform(0, 1, shape), rng.uniform(0, 5, shape), rng.uniform(0, 2, shape)
    a = rad.sweep(I, H, F, g, q, 3.0, 0.02, workers=1).intensity
    b = rad.sweep(I, H, F, g, q, 3.0, 0.02, workers=4).intensity
    assert a.tobytes() == b.tobytes()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.05), st.floats(0.0, 50.0))
def test_sweep_preserves_positivity(seed, dt, hmax):
    g = SpatialGrid((16,), (1.0,))
    q = AngularFrequencyQuadrature.build(2, 4, 1)
    rng = np.random.default_rng(seed)
    shape = (1, q.n_ordinates, 16)
    I = rng.uniform(0, 1, shape) * (rng.random(shape) < 0.5)
    res = rad.sweep(I, rng.uniform(0, hmax, shape), rng.uniform(0, 1, shape), g, q, 10.0, dt)
    assert res.intensity.min() >= 0
    assert res.clamped == 0.0
