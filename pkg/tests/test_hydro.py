import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhdsim import hydro
from rhdsim.grid import PhysicalParams, SpatialGrid


def test_eos_pressure():
    assert hydro.eos_pressure(np.array(2.0), np.array(3.0), PhysicalParams()) == pytest.approx(6.0)
    p = PhysicalParams(R=0.4, c_v=0.6, gamma=5 / 3)
    rho, theta = np.array([1.0, 2.0]), np.array([0.5, 3.0])
    # P = (gamma - 1) rho e with e = c_v theta
    assert np.allclose(hydro.eos_pressure(rho, theta, p), (p.gamma - 1) * rho * p.c_v * theta)
    with pytest.raises(ValueError):
        hydro.eos_pressure(np.array([-1.0]), np.array([1.0]), p)


def test_boundary_config_rejects_unknown_modes():
    with pytest.raises(ValueError):
        hydro.BoundaryConfig(velocity_mode="periodic")


def test_advect_density_identity_for_zero_velocity():
    g = SpatialGrid((16, 12), (1.0, 1.0))
    rho = np.random.default_rng(1).uniform(0.1, 2.0, g.shape)
    out = hydro.advect_density(rho, np.zeros((3,) + g.shape), g, 0.01)
    assert np.allclose(out, rho, rtol=0, atol=1e-15)


def test_tangency_check():
    g = SpatialGrid((32,), (1.0,))
    (x,) = g.mesh()
    w = np.zeros((3, 32))
    assert hydro.tangency_residual(w, g) == 0.0
    w[0] = np.sin(np.pi * x)
    assert hydro.tangency_residual(w, g) < 0.1
    w[0] = x
    with pytest.raises(hydro.TangencyError):
        hydro.tangency_residual(w, g)
    with pytest.raises(hydro.TangencyError):
        hydro.trace_characteristics(w, g, 0.01)


def test_advection_cfl_limit():
    g = SpatialGrid((32,), (1.0,))
    (x,) = g.mesh()
    w = np.zeros((3, 32))
    w[0] = 100 * np.sin(np.pi * x)
    with pytest.raises(hydro.AdvectionCFLError):
        hydro.trace_characteristics(w, g, 0.01)


def _heat_inputs(n):
    g = SpatialGrid((n,), (1.0,))
    return g, np.ones(n), np.zeros((3, n)), np.zeros(n)


def test_temperature_equilibrium_is_preserved():
    g, rho, w, N = _heat_inputs(32)
    th = np.full(32, 2.5)
    out = hydro.temperature_step(th, rho, w, w, N, 0.01, PhysicalParams(), g)
    assert np.allclose(out, 2.5, rtol=1e-10)


def test_temperature_cosine_mode_decays_at_the_heat_rate():
    n, dt = 128, 1e-3
    g, rho, w, N = _heat_inputs(n)
    p = PhysicalParams()
    (x,) = g.mesh()
    th = np.cos(np.pi * x)
    out = hydro.temperature_step(th, rho, w, w, N, dt, p, g)
    factor = 1.0 / (1.0 + dt * (p.kappa / p.c_v) * np.pi**2)
    assert np.allclose(out, factor * th, atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.1))
def test_temperature_stays_nonnegative_for_nonnegative_sources(seed, dt):
    rng = np.random.default_rng(seed)
    g = SpatialGrid((24,), (1.0,))
    th = rng.uniform(0, 2, 24) * (rng.random(24) < 0.7)
    rho = rng.uniform(0.01, 2, 24)
    N = rng.uniform(0, 5, 24)
    out = hydro.temperature_step(th, rho, np.zeros((3, 24)), np.zeros((3, 24)), N, dt, PhysicalParams(), g)
    assert out.min() >= -1e-12


def test_momentum_sine_mode_decays_at_the_lame_rate():
    n, dt = 128, 1e-3
    g = SpatialGrid((n,), (1.0,))
    p = PhysicalParams(mu=1.0, lam=0.0)
    (x,) = g.mesh()
    u = np.zeros((3, n))
    u[0] = np.sin(np.pi * x)
    out = hydro.momentum_step(u, np.ones(n), np.zeros((3, n)), np.ones(n), np.zeros((3, n)), dt, p, g,
                              hydro.BoundaryConfig())
    factor = 1.0 / (1.0 + dt * (2 * p.mu + p.lam) * np.pi**2)
    assert np.allclose(out[0], factor * u[0], atol=1e-5)
    assert np.allclose(out[1:], 0.0)


def test_momentum_in_full_vacuum_gives_zero_velocity():
    g = SpatialGrid((16, 16), (1.0, 1.0))
    z = np.zeros(g.shape)
    out = hydro.momentum_step(np.zeros((3,) + g.shape), z, np.zeros((3,) + g.shape), z, np.zeros((3,) + g.shape),
                              1e-3, PhysicalParams(mu=1.0, lam=0.5), g, hydro.BoundaryConfig())
    assert np.all(out == 0)
