"""Linear subproblem solvers for density, temperature and momentum.

All three share one set of backward characteristics of the frozen velocity
``w``; advection is semi-Lagrangian (cubic interpolation at the feet),
diffusion and viscosity are backward Euler with sparse iterative solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import interp
from . import operators as ops
from .grid import PhysicalParams, SpatialGrid
from .linsolve import solve

VELOCITY_MODES = ("dirichlet", "navier_slip")


class AdvectionCFLError(ValueError):
    """Frozen velocity moves a particle too far in one step."""


class TangencyError(ValueError):
    """Frozen velocity is not tangential on the walls."""


@dataclass(frozen=True)
class BoundaryConfig:
    """Wall conditions: velocity (``dirichlet`` or ``navier_slip``),
    temperature (``neumann``) and intensity (``transparency``)."""

    velocity_mode: str = "dirichlet"
    temperature_mode: str = "neumann"
    intensity_mode: str = "transparency"

    def __post_init__(self):
        if self.velocity_mode not in VELOCITY_MODES:
            raise ValueError(f"velocity_mode must be one of {VELOCITY_MODES}, got {self.velocity_mode!r}")
        if self.temperature_mode != "neumann":
            raise ValueError(f"only 'neumann' temperature walls are supported, got {self.temperature_mode!r}")
        if self.intensity_mode != "transparency":
            raise ValueError(f"only 'transparency' intensity walls are supported, got {self.intensity_mode!r}")


def eos_pressure(rho: np.ndarray, theta: np.ndarray, p: PhysicalParams) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho < 0) or np.any(theta < 0):
        raise ValueError("pressure needs rho >= 0 and theta >= 0")
    return p.R * rho * theta


@dataclass(frozen=True)
class Characteristics:
    """Feet of the backward characteristics over one step.

    ``coords`` are fractional cell indices of the feet; ``div_mid`` is
    ``div w`` sampled at the RK2 midpoints.
    """

    coords: list
    div_mid: np.ndarray
    dt: float


def tangency_residual(w: np.ndarray, grid: SpatialGrid, tol: float = 0.1) -> float:
    """Largest wall normal velocity relative to ``max|w|``; raise above ``tol``.

    Wall values come from second-order extrapolation of the cell values,
    so ``tol`` must leave room for that error on coarse grids.
    """
    wmax = float(np.max(np.abs(w[: grid.dim]))) if w.size else 0.0
    if wmax == 0:
        return 0.0
    worst = 0.0
    for a in range(grid.dim):
        lo, hi = ops.wall_values(w[a], grid, a)
        wa = max(float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
        if wa > tol * wmax:
            raise TangencyError(f"w.n = {wa:.3g} on the axis-{a} walls (max |w| = {wmax:.3g})")
        worst = max(worst, wa / wmax)
    return worst


def trace_characteristics(w: np.ndarray, grid: SpatialGrid, dt: float, cfl: float = 1.0,
                          check_tangency: bool = True, tangency_tol: float = 0.1) -> Characteristics:
    """Backtrack ``dx/ds = w`` from every cell centre by one midpoint (RK2) step.

    ``check_tangency`` applies :func:`tangency_residual` to ``w`` first. The
    coupler skips it for velocities from its own momentum solves, whose
    ghost cells impose ``u.n = 0`` exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    for a in range(grid.dim):
        shift = float(np.max(np.abs(w[a]))) * dt / grid.spacing[a]
        if shift > cfl:
            raise AdvectionCFLError(f"|w| dt / h = {shift:.3g} on axis {a} exceeds {cfl}")
    if check_tangency:
        tangency_residual(w, grid, tangency_tol)
    x = grid.mesh()
    wd = w[: grid.dim]
    clampc = lambda s, n: np.clip(s, -0.5, n - 0.5)  # noqa: E731
    mid = [clampc((x[a] - 0.5 * dt * wd[a]) / grid.spacing[a] - 0.5, grid.cells[a]) for a in range(grid.dim)]
    w_mid = interp.cubic(wd, mid, grid)
    foot = [clampc((x[a] - dt * w_mid[a]) / grid.spacing[a] - 0.5, grid.cells[a]) for a in range(grid.dim)]
    # differentiate the interpolant itself: third-order accurate, consistent with w_mid
    div_mid = sum(interp.cubic_derivative(wd[a], mid, grid, a) for a in range(grid.dim))
    return Characteristics(foot, div_mid, dt)


def advect_density(rho: np.ndarray, w: np.ndarray, grid: SpatialGrid, dt: float,
                   chars: Characteristics | None = None, **kw) -> np.ndarray:
    """Flow-map update ``rho' = rho(foot) exp(-dt div w(midpoint))``."""
    chars = chars or trace_characteristics(w, grid, dt, **kw)
    up = np.maximum(interp.cubic(rho, chars.coords, grid), 0.0)
    return up * np.exp(-chars.dt * chars.div_mid)


def temperature_step(theta: np.ndarray, rho_new: np.ndarray, w: np.ndarray, u_frozen: np.ndarray, N_r: np.ndarray,
                     dt: float, p: PhysicalParams, grid: SpatialGrid, chars: Characteristics | None = None,
                     rtol: float = 1e-10) -> np.ndarray:
    """Backward-Euler step of the density-weighted temperature equation.

    Advection and the ``(R/c_v) theta div w`` term go along the
    characteristics; then
    ``(rho'/dt - (kappa/c_v) Lap_N) theta' = rho' theta~/dt + (Q(u) + N_r)/c_v``
    is solved with homogeneous Neumann walls.
    """
    chars = chars or trace_characteristics(w, grid, dt)
    th = interp.cubic(theta, chars.coords, grid)  # linear step; the coupler clamps theta >= 0
    th *= np.exp(-dt * (p.R / p.c_v) * chars.div_mid)
    A = sp.diags(rho_new.ravel() / dt) - (p.kappa / p.c_v) * ops.neumann_laplacian(grid)
    rhs = rho_new * th / dt + (ops.dissipation_Q(u_frozen, p, grid) + N_r) / p.c_v
    x = solve(A, rhs.ravel(), x0=theta.ravel(), symmetric=True, rtol=rtol, label="temperature solve")
    return x.reshape(grid.shape)


def momentum_step(u: np.ndarray, rho_new: np.ndarray, w: np.ndarray, P_m: np.ndarray, f_rad: np.ndarray, dt: float,
                  p: PhysicalParams, grid: SpatialGrid, bc: BoundaryConfig, chars: Characteristics | None = None,
                  rtol: float = 1e-10) -> np.ndarray:
    """Backward-Euler step ``(rho'/dt + L) u' = rho' u~/dt - grad P + f_rad``.

    ``u~`` is ``u`` at the characteristic feet. Walls follow
    ``bc.velocity_mode`` through ghost-cell parity.
    """
    chars = chars or trace_characteristics(w, grid, dt)
    ut = interp.cubic(u, chars.coords, grid)
    L, symmetric = ops.lame_matrix(grid, p, bc.velocity_mode)
    mass = sp.diags(np.tile(rho_new.ravel() / dt, 3))
    rhs = rho_new[None] * ut / dt - ops.grad(P_m, grid) + f_rad
    x = solve(mass + L, rhs.ravel(), x0=u.ravel(), symmetric=symmetric, rtol=rtol, label="momentum solve")
    return x.reshape(u.shape)
