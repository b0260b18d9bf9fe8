import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhdsim import interp
from rhdsim import operators as ops
from rhdsim.grid import PhysicalParams, SpatialGrid


def test_lp_norm_of_x():
    g = SpatialGrid((64,), (1.0,))
    (x,) = g.mesh()
    assert ops.lp_norm(x, g, 2) == pytest.approx(1 / np.sqrt(3), abs=1e-3)
    assert ops.lp_norm(x, g, np.inf) == pytest.approx(x.max())


@settings(max_examples=40, deadline=None)
@given(st.one_of(st.just(0.0), st.floats(1e-6, 100), st.floats(-100, -1e-6)), st.sampled_from([1, 2, 6, np.inf]))
def test_lp_norm_is_homogeneous(a, p):
    g = SpatialGrid((16, 8), (1.0, 2.0))
    x, y = g.mesh()
    f = np.sin(3 * x) + y**2
    assert ops.lp_norm(a * f, g, p) == pytest.approx(abs(a) * ops.lp_norm(f, g, p), rel=1e-12)


def test_gradient_is_exact_on_quadratics():
    g = SpatialGrid((10, 12), (1.0, 1.5))
    x, y = g.mesh()
    G = ops.grad(x**2 + 3 * x * y, g)
    assert np.allclose(G[0], 2 * x + 3 * y, atol=1e-12)
    assert np.allclose(G[1], 3 * x, atol=1e-12)
    assert np.all(G[2] == 0)


def test_div_and_curl_of_linear_fields():
    g = SpatialGrid((6, 6, 6), (1.0, 1.0, 1.0))
    x, y, z = g.mesh()
    assert np.allclose(ops.div(np.stack([x, y, z]), g), 3.0)
    rot = ops.curl(np.stack([-y, x, np.zeros_like(x)]), g)
    assert np.allclose(rot[:2], 0.0) and np.allclose(rot[2], 2.0)


def test_dissipation_of_uniform_expansion():
    g = SpatialGrid((6, 6, 6), (1.0, 1.0, 1.0))
    u = np.stack(g.mesh())
    assert np.allclose(ops.dissipation_Q(u, PhysicalParams(mu=1.0, lam=0.0), g), 6.0)
    assert np.allclose(ops.dissipation_Q(u, PhysicalParams(mu=1.0, lam=0.5), g), 6.0 + 0.5 * 9)


def test_lame_apply_on_sine_mode():
    g = SpatialGrid((128,), (1.0,))
    (x,) = g.mesh()
    u = np.zeros((3, 128))
    u[0] = np.sin(np.pi * x)
    Lu = ops.lame_apply(u, PhysicalParams(mu=1.0, lam=0.0), g)
    inner = slice(4, -4)
    assert np.allclose(Lu[0, inner], 2 * np.pi**2 * u[0, inner], rtol=1e-3)
    # ghost-cell Dirichlet matrix gives the same eigen-relation up to the stencil eigenvalue
    Lg = ops.lame_apply(u, PhysicalParams(mu=1.0, lam=0.0), g, "dirichlet")
    lam_h = 2 * (4 / g.spacing[0] ** 2) * np.sin(np.pi * g.spacing[0] / 2) ** 2
    assert np.allclose(Lg[0], lam_h * u[0], atol=1e-9)


def test_ghost_matrices_reproduce_wall_eigenmodes():
    g = SpatialGrid((32,), (1.0,))
    (x,) = g.mesh()
    h = g.spacing[0]
    lam_h = (4 / h**2) * np.sin(np.pi * h / 2) ** 2
    D2odd = ops.second_derivative_1d(32, h, ops.ODD)
    D2even = ops.second_derivative_1d(32, h, ops.EVEN)
    assert np.allclose(D2odd @ np.sin(np.pi * x), -lam_h * np.sin(np.pi * x), atol=1e-10)
    assert np.allclose(D2even @ np.cos(np.pi * x), -lam_h * np.cos(np.pi * x), atol=1e-10)
    N = ops.neumann_laplacian(SpatialGrid((5, 7), (1.0, 1.0)))
    assert abs(N - N.T).max() < 1e-12
    assert np.allclose(N @ np.ones(35), 0.0)


@pytest.mark.parametrize("bc", ["dirichlet", "navier_slip"])
def test_lame_matrix_symmetry_flag(bc):
    g = SpatialGrid((6, 5), (1.0, 1.0))
    A, sym = ops.lame_matrix(g, PhysicalParams(mu=1.0, lam=0.5), bc)
    if sym:
        assert abs(A - A.T).max() < 1e-10
    assert A.shape == (3 * g.size, 3 * g.size)


def test_face_normal_velocity_vanishes_for_wall_modes():
    g = SpatialGrid((8, 8), (1.0, 1.0))
    u = np.random.default_rng(0).normal(size=(3, 8, 8))
    for bc in ("dirichlet", "navier_slip"):
        for face in ops.face_normal_velocity(u, g, bc):
            assert np.all(face == 0)


def test_wall_values_exact_for_linear_profiles():
    g = SpatialGrid((10,), (2.0,))
    (x,) = g.mesh()
    lo, hi = ops.wall_values(3 * x + 1, g, 0)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(7.0)


def test_gradient_decomposition_residual_is_small_for_smooth_fields():
    g = SpatialGrid((64, 64), (1.0, 1.0))
    x, y = g.mesh()
    u = np.stack([2 + np.sin(np.pi * x), 1 + x * y, np.cos(y)])
    r = ops.gradient_decomposition_residual(u, g)
    assert np.max(np.abs(r)) < 5e-3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.0, 19.0))
def test_cubic_interpolation_reproduces_cubics(coef, s):
    g = SpatialGrid((20,), (1.0,))
    (x,) = g.mesh()
    poly = np.polynomial.Polynomial(coef)
    xs = (s + 0.5) * g.spacing[0]
    val = interp.cubic(poly(x), [np.array([s])], g)[0]
    der = interp.cubic_derivative(poly(x), [np.array([s])], g, 0)[0]
    assert val == pytest.approx(poly(xs), abs=1e-10)
    assert der == pytest.approx(poly.deriv()(xs), abs=1e-8)


def test_index_coords_roundtrip():
    g = SpatialGrid((8, 4), (2.0, 1.0))
    pts = np.stack(g.mesh())
    c = interp.index_coords(pts, g)
    assert np.allclose(c[0][:, 0], np.arange(8)) and np.allclose(c[1][0], np.arange(4))
