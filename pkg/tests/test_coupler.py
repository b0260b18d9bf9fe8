import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhdsim import coupler as cp
from rhdsim import radiation as rad
from rhdsim.grid import AngularFrequencyQuadrature, PhysicalParams, SpatialGrid

from conftest import make_setup


def _model(n=16, sigma=1.0):
    g = SpatialGrid((n,), (1.0,))
    q = AngularFrequencyQuadrature.build(2, 4, 1)
    return cp.Model(make_setup(g, q, rad.constant_model(sigma)), PhysicalParams())


def _static(model, rho=1.0, theta=1.0):
    g, q = model.grid, model.setup.quad
    return cp.Iterate(np.zeros((q.n_groups, q.n_ordinates) + g.shape), np.full(g.shape, rho),
                      np.zeros((3,) + g.shape), np.full(g.shape, theta))


def test_regularize_vacuum():
    assert np.allclose(cp.regularize_vacuum(np.array([0.0, 1.0]), 1e-3), [1e-3, 1.001])
    with pytest.raises(ValueError):
        cp.regularize_vacuum(np.zeros(2), -1.0)


def test_picard_config_validation():
    with pytest.raises(ValueError):
        cp.PicardConfig(epsilon_weight=0.0)
    with pytest.raises(ValueError):
        cp.PicardConfig(max_iters=0)


def test_uniform_rest_state_is_a_fixed_point():
    model = _model()
    state = _static(model)
    new, rep = cp.picard_solve(state, 1e-3, cp.PicardConfig(), model)
    assert rep.converged and rep.iterations == 1
    assert np.allclose(new.rho, 1.0) and np.allclose(new.theta, 1.0, rtol=1e-9)
    assert np.allclose(new.u, 0.0) and np.all(new.I == 0)


def test_all_zero_state_stays_zero():
    model = _model()
    state = _static(model, rho=0.0, theta=0.0)
    new, rep = cp.picard_solve(state, 1e-3, cp.PicardConfig(), model)
    assert rep.converged
    for arr in (new.I, new.rho, new.u, new.theta):
        assert np.all(arr == 0)


def test_huge_tolerance_stops_after_one_sweep():
    model = _model()
    state = _static(model)
    state = cp.Iterate(state.I + 1.0, state.rho, state.u, state.theta)
    _, rep = cp.picard_solve(state, 1e-3, cp.PicardConfig(tol_lambda=1e9), model)
    assert rep.iterations == 1 and rep.converged


def test_sweep_order_is_density_intensity_temperature_velocity():
    calls = []

    def wrap(name, fn):
        def inner(*a, **k):
            calls.append(name)
            return fn(*a, **k)
        return inner

    base = cp.SubproblemSolvers()
    solvers = cp.SubproblemSolvers(wrap("rho", base.density), wrap("I", base.transport),
                                   wrap("theta", base.temperature), wrap("u", base.momentum))
    model = _model()
    state = _static(model)
    state = cp.Iterate(state.I + 1.0, state.rho, state.u, state.theta)
    cp.picard_solve(state, 1e-3, cp.PicardConfig(max_iters=2, tol_lambda=1e-300), model, solvers=solvers)
    assert calls == ["rho", "I", "theta", "u"] * 2


def test_contraction_metric_zero_on_equal_iterates():
    model = _model()
    a = _static(model)
    assert cp.contraction_metric(a, a, 1.0, model.grid, model.setup.quad.weights) == 0.0


def test_contraction_metric_brute_force():
    g = SpatialGrid((4,), (2.0,))
    q = AngularFrequencyQuadrature.build(1, 2, 1)
    rng = np.random.default_rng(3)

    def rand():
        return cp.Iterate(rng.uniform(0, 1, (1, 2, 4)), rng.uniform(0, 2, 4), rng.normal(size=(3, 4)),
                          rng.uniform(0, 1, 4))

    a, b = rand(), rand()
    eps = 0.3
    h = 0.5
    total = 0.0
    for i in range(4):
        for m in range(2):
            total += q.weights[0, m] * (a.I[0, m, i] - b.I[0, m, i]) ** 2 * h
        total += (a.rho[i] - b.rho[i]) ** 2 * h
        total += eps * a.rho[i] * (a.theta[i] - b.theta[i]) ** 2 * h
        total += a.rho[i] * sum((a.u[k, i] - b.u[k, i]) ** 2 for k in range(3)) * h
    assert cp.contraction_metric(a, b, eps, g, q.weights) == pytest.approx(total, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0))
def test_contraction_metric_is_nonnegative(seed, eps):
    g = SpatialGrid((6,), (1.0,))
    q = AngularFrequencyQuadrature.build(2, 4, 1)
    rng = np.random.default_rng(seed)

    def rand():
        return cp.Iterate(rng.uniform(0, 1, (1, 8, 6)), rng.uniform(0, 2, 6), rng.normal(size=(3, 6)),
                          rng.uniform(0, 1, 6))

    a, b = rand(), rand()
    assert cp.contraction_metric(a, b, eps, g, q.weights) >= 0
    vac = cp.Iterate(a.I, np.zeros(6), a.u, a.theta)
    # zero density removes the temperature and velocity terms
    only = cp.contraction_metric(vac, cp.Iterate(a.I, b.rho, b.u, b.theta), eps, g, q.weights)
    assert only == pytest.approx(float(np.sum(b.rho**2)) * g.cell_volume)


def test_advance_halves_on_nonconvergence():
    model = _model()
    state = _static(model)
    state = cp.Iterate(state.I + 1.0, state.rho, state.u, state.theta)
    out = cp.advance(state, 0.0, 2e-3, cp.PicardConfig(max_iters=1, tol_lambda=1e-300), model, max_halvings=1)
    assert out.dt_used == [1e-3, 1e-3]
