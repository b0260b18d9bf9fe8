"""Discrete differential operators on the cell-centred box grid.

Two families live here:

* field operators (``grad``, ``div``, ``curl``, ``laplacian``, ...) with
  second-order central interior stencils and second-order one-sided rows at
  the walls; they assume nothing about boundary data and are used by the
  diagnostics;
* sparse ghost-cell matrices (``second_derivative_1d``, ``lame_matrix``,
  ...) that encode a boundary condition through the parity of the ghost
  value across each wall; these build the implicit solves.

Vector fields have shape ``(3, *grid.shape)``; rank-2 tensors
``(3, 3, *grid.shape)`` with ``T[i, j] = d u_i / d x_j``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import PhysicalParams, SpatialGrid

ODD = "odd"  # ghost = -interior: field vanishes on the face
EVEN = "even"  # ghost = +interior: normal derivative vanishes on the face


def _field_axis(f: np.ndarray, grid: SpatialGrid, axis: int) -> int:
    return f.ndim - grid.dim + axis


def lp_norm(f: np.ndarray, grid: SpatialGrid, p: float = 2) -> float:
    """Midpoint-rule L^p norm over the box.

    Leading axes beyond the grid shape are treated as vector/tensor
    components and combined pointwise with the Euclidean norm.
    """
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    f = np.asarray(f, dtype=float)
    if f.shape[f.ndim - grid.dim:] != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    lead = f.ndim - grid.dim
    mag = np.sqrt(np.sum(f.reshape((-1,) + grid.shape) ** 2, axis=0)) if lead else np.abs(f)
    if np.isinf(p):
        return float(mag.max())
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def partial(f: np.ndarray, grid: SpatialGrid, axis: int) -> np.ndarray:
    """d f / d x_axis; identically zero along inactive axes."""
    if axis >= grid.dim:
        return np.zeros_like(f, dtype=float)
    return np.gradient(f, grid.spacing[axis], axis=_field_axis(f, grid, axis), edge_order=2)


def grad(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    out = np.zeros((3,) + np.shape(f))
    for a in range(grid.dim):
        out[a] = partial(f, grid, a)
    return out


def jacobian(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """``J[i, j] = d u_i / d x_j`` for a 3-component field."""
    out = np.zeros((3, 3) + grid.shape)
    for i in range(3):
        for j in range(grid.dim):
            out[i, j] = partial(u[i], grid, j)
    return out


def div(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    out = np.zeros(grid.shape)
    for a in range(grid.dim):
        out += partial(u[a], grid, a)
    return out


def curl(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    d = lambda i, j: partial(u[i], grid, j)  # noqa: E731
    return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def second_partial(f: np.ndarray, grid: SpatialGrid, axis: int) -> np.ndarray:
    """Compact 3-point second difference; one-sided 4-point rows at the walls."""
    if axis >= grid.dim:
        return np.zeros_like(f, dtype=float)
    ax = _field_axis(f, grid, axis)
    h2 = grid.spacing[axis] ** 2
    g = np.moveaxis(np.asarray(f, dtype=float), ax, 0)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / h2
    out[0] = (2 * g[0] - 5 * g[1] + 4 * g[2] - g[3]) / h2
    out[-1] = (2 * g[-1] - 5 * g[-2] + 4 * g[-3] - g[-4]) / h2
    return np.moveaxis(out, 0, ax)


def laplacian(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    out = np.zeros(np.shape(f))
    for a in range(grid.dim):
        out += second_partial(f, grid, a)
    return out


def lame_apply(u: np.ndarray, params: PhysicalParams, grid: SpatialGrid, velocity_bc: str | None = None) -> np.ndarray:
    """``L u = -mu Lap u - (lambda + mu) grad div u``.

    Without ``velocity_bc`` the one-sided field stencils are used. With
    ``velocity_bc`` ("dirichlet" or "navier_slip") the ghost-cell matrix of
    the implicit momentum solve is applied instead.
    """
    if velocity_bc is not None:
        A, _ = lame_matrix(grid, params, velocity_bc)
        return (A @ u.reshape(-1)).reshape(u.shape)
    return -params.mu * laplacian(u, grid) - (params.lam + params.mu) * grad(div(u, grid), grid)


def deformation(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    J = jacobian(u, grid)
    return 0.5 * (J + J.transpose(1, 0, *range(2, J.ndim)))


def dissipation_Q(u: np.ndarray, params: PhysicalParams, grid: SpatialGrid) -> np.ndarray:
    """``Q(u) = mu/2 |grad u + grad u^T|^2 + lambda (div u)^2`` pointwise."""
    J = jacobian(u, grid)
    S = J + J.transpose(1, 0, *range(2, J.ndim))
    trace = J[0, 0] + J[1, 1] + J[2, 2]
    return 0.5 * params.mu * np.sum(S**2, axis=(0, 1)) + params.lam * trace**2


def gradient_decomposition_residual(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Pointwise ``|grad u|^2 - |u|^2 |grad(u/|u|)|^2 - |grad |u||^2``.

    Vanishes identically for smooth fields with ``|u| > 0``; the discrete
    value measures consistency of the gradient stencil.
    """
    mag = np.sqrt(np.sum(u**2, axis=0))
    if np.any(mag == 0):
        raise ValueError("decomposition needs |u| > 0 everywhere")
    Ju = jacobian(u, grid)
    Jdir = jacobian(u / mag, grid)
    gmag = grad(mag, grid)
    return np.sum(Ju**2, axis=(0, 1)) - mag**2 * np.sum(Jdir**2, axis=(0, 1)) - np.sum(gmag**2, axis=0)


# ---------------------------------------------------------------------------
# ghost-cell sparse stencils
# ---------------------------------------------------------------------------


def _ghost_sign(parity: str) -> float:
    if parity == ODD:
        return -1.0
    if parity == EVEN:
        return 1.0
    raise ValueError(f"unknown ghost parity {parity!r}")


def first_derivative_1d(n: int, h: float, parity: str) -> sp.csr_matrix:
    """Central first difference with a reflected ghost at both walls.

    The adjoint of the ODD operator is minus the EVEN one, which is what
    makes the Navier-slip Lame matrix symmetric.
    """
    s = _ghost_sign(parity)
    D = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n)).tolil()
    D[0, 0] = -s
    D[n - 1, n - 1] = s
    return (D / (2 * h)).tocsr()


def second_derivative_1d(n: int, h: float, parity: str) -> sp.csr_matrix:
    s = _ghost_sign(parity)
    main = -2.0 * np.ones(n)
    main[0] += s
    main[-1] += s
    T = sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1], shape=(n, n))
    return (T / h**2).tocsr()


def along_axis(op: sp.spmatrix, grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    """Lift a 1D operator on ``axis`` to the flattened (C-order) grid."""
    mats = [sp.identity(n, format="csr") for n in grid.cells]
    mats[axis] = op
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.tocsr()


def laplacian_matrix(grid: SpatialGrid, parities) -> sp.csr_matrix:
    """Ghost-cell Laplacian; ``parities[a]`` is the ghost parity on axis ``a``."""
    out = sp.csr_matrix((grid.size, grid.size))
    for a in range(grid.dim):
        out = out + along_axis(second_derivative_1d(grid.cells[a], grid.spacing[a], parities[a]), grid, a)
    return out.tocsr()


@lru_cache(maxsize=16)
def neumann_laplacian(grid: SpatialGrid) -> sp.csr_matrix:
    return laplacian_matrix(grid, [EVEN] * grid.dim)


def velocity_parities(velocity_bc: str, dim: int) -> list[list[str]]:
    """Ghost parity of component ``i`` across the walls normal to axis ``a``."""
    if velocity_bc == "dirichlet":
        return [[ODD] * dim for _ in range(3)]
    if velocity_bc == "navier_slip":
        # normal component odd (u.n = 0), tangential even (free slip)
        return [[ODD if i == a else EVEN for a in range(dim)] for i in range(3)]
    raise ValueError(f"unknown velocity boundary condition {velocity_bc!r}")


@lru_cache(maxsize=16)
def lame_matrix(grid: SpatialGrid, params: PhysicalParams, velocity_bc: str) -> tuple[sp.csr_matrix, bool]:
    """Assemble ``L = -mu Lap - (lambda+mu) grad div`` on the 3-component grid.

    Returns the matrix and whether it is symmetric by construction (1D,
    Navier-slip, or ``lambda + mu = 0``). Dirichlet cross-derivative blocks
    in 2D/3D are consistent but not mutually adjoint. Results are cached;
    treat the returned matrix as read-only.
    """
    par = velocity_parities(velocity_bc, grid.dim)
    n, dim = grid.size, grid.dim
    bulk = params.lam + params.mu
    D = lambda a, p: along_axis(first_derivative_1d(grid.cells[a], grid.spacing[a], p), grid, a)  # noqa: E731
    T = lambda a, p: along_axis(second_derivative_1d(grid.cells[a], grid.spacing[a], p), grid, a)  # noqa: E731
    blocks = [[None] * 3 for _ in range(3)]
    for i in range(3):
        diag = -params.mu * laplacian_matrix(grid, par[i]) if dim else sp.csr_matrix((n, n))
        if i < dim:
            diag = diag - bulk * T(i, par[i][i])
        blocks[i][i] = diag
        for j in range(3):
            if j == i:
                continue
            if i < dim and j < dim and bulk != 0.0:
                blocks[i][j] = -bulk * (D(i, par[j][i]) @ D(j, par[j][j]))
            else:
                blocks[i][j] = sp.csr_matrix((n, n))
    symmetric = dim == 1 or velocity_bc == "navier_slip" or bulk == 0.0
    return sp.bmat(blocks, format="csr"), symmetric


def face_normal_velocity(u: np.ndarray, grid: SpatialGrid, velocity_bc: str) -> list[np.ndarray]:
    """Normal velocity on each wall, from the cell value and its ghost.

    Returns one array per wall face (low then high, for each active axis).
    """
    par = velocity_parities(velocity_bc, grid.dim)
    faces = []
    for a in range(grid.dim):
        s = _ghost_sign(par[a][a])
        un = np.moveaxis(u[a], a, 0)
        faces.append(0.5 * (un[0] + s * un[0]))
        faces.append(0.5 * (un[-1] + s * un[-1]))
    return faces


def wall_values(f: np.ndarray, grid: SpatialGrid, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Second-order extrapolation of a cell field to the two walls normal to ``axis``."""
    g = np.moveaxis(f, _field_axis(f, grid, axis), 0)
    return 1.5 * g[0] - 0.5 * g[1], 1.5 * g[-1] - 0.5 * g[-2]
