"""Compatibility check, vacuum elliptic check, blow-up monitor and the energy ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from . import operators as ops
from . import radiation as rad
from .coupler import Iterate
from .grid import PhysicalParams, SpatialGrid
from .hydro import eos_pressure

EPS_VAC = 1e-10
TOL_VAC = 1e-8
VACUUM_EROSION = 2  # cells; wide enough for the composite grad-div stencil


# ---------------------------------------------------------------------------
# compatibility of initial data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompatibilityReport:
    g1_norm: float
    g2_norm: float
    vacuum_residual_max: float
    classification: str
    vacuum_cells: int = 0
    tol_vac: float = 0.0
    growth: float | None = None  # masked-norm ratio fine / coarse, when refined data were given


def compatibility_residuals(data: Iterate, setup: rad.RadiationSetup, p: PhysicalParams, heating_sign: float = -1.0):
    """Momentum and temperature residuals of the initial data.

    ``R1 = L u0 + grad(R rho0 theta0) - f_rad(A0)`` and
    ``R2 = -(kappa Lap theta0 + Q(u0) + s N_r(A0)) / c_v`` with ``s`` the
    heating sign used by the solver. Field stencils, no boundary data.
    """
    grid = setup.grid
    P = eos_pressure(data.rho, data.theta, p)
    f = rad.radiation_force(data.I, data.rho, data.theta, setup, 0.0)
    N = rad.radiation_heating(data.I, data.rho, data.theta, data.u, setup, 0.0)
    R1 = ops.lame_apply(data.u, p, grid) + ops.grad(P, grid) - f
    R2 = -(p.kappa * ops.laplacian(data.theta, grid) + ops.dissipation_Q(data.u, p, grid) + heating_sign * N) / p.c_v
    return R1, R2


def vacuum_interior(rho0: np.ndarray, eps_vac: float = EPS_VAC, erosion: int = VACUUM_EROSION) -> np.ndarray:
    """Vacuum cells at least ``erosion`` cells away from any non-vacuum cell.

    The box walls do not erode the set.
    """
    vac = rho0 < eps_vac
    if erosion <= 0 or not vac.any():
        return vac
    return ndimage.binary_erosion(vac, iterations=erosion, border_value=1)


def _masked_norms(data: Iterate, setup, p, eps_vac, heating_sign):
    R1, R2 = compatibility_residuals(data, setup, p, heating_sign)
    grid = setup.grid
    dense = data.rho >= eps_vac
    # sqrt(rho) taken as its largest value over the residual stencil, so a
    # cell just outside the vacuum edge is not divided by its own tiny density
    rho_s = ndimage.maximum_filter(data.rho, size=2 * VACUUM_EROSION + 1, mode="nearest")
    w = np.where(dense, 1.0 / np.sqrt(np.where(dense, rho_s, 1.0)), 0.0)
    g1 = ops.lp_norm(R1 * w, grid, 2)
    g2 = ops.lp_norm(R2 * w, grid, 2)
    core = vacuum_interior(data.rho, eps_vac)
    mag1 = np.sqrt(np.sum(R1**2, axis=0))
    vac_max = float(max(mag1[core].max(initial=0.0), np.abs(R2[core]).max(initial=0.0)))
    return g1, g2, vac_max, int((data.rho < eps_vac).sum())


def check_compatibility(data: Iterate, setup: rad.RadiationSetup, p: PhysicalParams, eps_vac: float = EPS_VAC,
                        tol_vac: float | None = None, refined: tuple | None = None,
                        heating_sign: float = -1.0, growth_limit: float = 2.0) -> CompatibilityReport:
    """Classify initial data against the initial-layer compatibility condition.

    Off vacuum the residuals are divided by ``sqrt(rho0)`` and measured in
    L^2; inside the vacuum (away from its edge) they must vanish to
    ``tol_vac``. ``refined = (data_fine, setup_fine)`` re-evaluates on a
    finer grid: masked norms growing by more than ``growth_limit`` count
    as divergent (incompatible), growth above ``sqrt(growth_limit)`` as
    marginal. Without refined data only the vacuum test and finiteness
    decide.
    """
    g1, g2, vac_max, n_vac = _masked_norms(data, setup, p, eps_vac, heating_sign)
    if tol_vac is None:
        P = eos_pressure(data.rho, data.theta, p)
        tol_vac = TOL_VAC * (1.0 + float(np.max(np.abs(P))) + float(np.max(np.abs(data.u))))
    finite = math.isfinite(g1) and math.isfinite(g2)
    growth = None
    if refined is not None:
        fg1, fg2, fvac, _ = _masked_norms(refined[0], refined[1], p, eps_vac, heating_sign)
        vac_max = max(vac_max, fvac)
        coarse, fine = math.hypot(g1, g2), math.hypot(fg1, fg2)
        growth = fine / coarse if coarse > 0 else (1.0 if fine == 0 else math.inf)
    if not finite or vac_max > tol_vac or (growth is not None and growth > growth_limit):
        cls = "incompatible"
    elif growth is not None and growth > math.sqrt(growth_limit):
        cls = "marginal"
    else:
        cls = "compatible"
    return CompatibilityReport(g1, g2, vac_max, cls, n_vac, tol_vac, growth)


# ---------------------------------------------------------------------------
# vacuum elliptic system
# ---------------------------------------------------------------------------


def _smallest_eigen(A: sp.spmatrix, iters: int = 500, tol: float = 1e-12) -> float:
    n = A.shape[0]
    lu = spla.splu(sp.csc_matrix(A))
    x = 1.0 + 0.1 * np.cos(np.arange(n))  # fixed start vector
    x /= np.linalg.norm(x)
    est = math.inf
    for _ in range(iters):
        y = lu.solve(x)
        y /= np.linalg.norm(y)
        new = float(y @ (A @ y))
        x = y
        if abs(new - est) <= tol * abs(new):
            est = new
            break
        est = new
    return est


def vacuum_elliptic_check(grid: SpatialGrid, vacuum_mask: np.ndarray, p: PhysicalParams, velocity_bc: str = "dirichlet"):
    """Smallest eigenvalues of the Lame and heat operators on the vacuum set.

    Values outside the mask are held at zero; on the box walls the
    operators keep their own wall conditions (velocity ``velocity_bc``,
    Neumann for temperature). Returns a dict with ``unique_zero``,
    ``min_eigen_estimate`` and the two parts.
    """
    mask = np.asarray(vacuum_mask, dtype=bool)
    if not mask.any():
        return {"unique_zero": True, "min_eigen_estimate": math.inf, "lame": math.inf, "heat": math.inf, "cells": 0}
    idx = np.flatnonzero(mask.ravel())
    L, _ = ops.lame_matrix(grid, p, velocity_bc)
    vidx = np.concatenate([idx + k * grid.size for k in range(3)])
    Lr = L[vidx][:, vidx]
    H = (-p.kappa * ops.neumann_laplacian(grid))[idx][:, idx]
    lam_L = _smallest_eigen(Lr)
    try:
        lam_H = _smallest_eigen(H)
    except RuntimeError:  # exactly singular (pure Neumann on the whole box)
        lam_H = 0.0
    est = min(lam_L, lam_H)
    return {"unique_zero": bool(est > 1e-12 * max(1.0, abs(lam_L))), "min_eigen_estimate": est,
            "lame": lam_L, "heat": lam_H, "cells": int(mask.sum())}


# ---------------------------------------------------------------------------
# blow-up functionals
# ---------------------------------------------------------------------------


def effective_flux(u: np.ndarray, P_m: np.ndarray, p: PhysicalParams, grid: SpatialGrid) -> np.ndarray:
    return (2 * p.mu + p.lam) * ops.div(u, grid) - P_m


def vorticity(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return ops.curl(u, grid)


def intensity_gradient_norms(I: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Spatial ``|grad I[g, m]|_2`` for every (g, m)."""
    out = np.zeros(I.shape[:2])
    for g in range(I.shape[0]):
        for m in range(I.shape[1]):
            out[g, m] = ops.lp_norm(ops.grad(I[g, m], grid), grid, 2)
    return out


@dataclass(frozen=True)
class BlowupReport:
    grad_I_norm: float
    rho_inf: float
    theta_inf: float
    G_norms: tuple[float, float]
    omega_norms: tuple[float, float]
    bkm_integrand: float
    composite: float
    tripped: bool
    grad_I_running: float | None = None


def blowup_monitor(I: np.ndarray, rho: np.ndarray, u: np.ndarray, theta: np.ndarray, setup: rad.RadiationSetup,
                   p: PhysicalParams, threshold: float | None = None, running_max: np.ndarray | None = None) -> BlowupReport:
    """Evaluate ``|grad I| + |rho|_inf + |theta|_inf`` and the companion functionals.

    ``running_max`` (shape (G, M)) is updated in place with the largest
    per-(g, m) gradient norm seen so far; the report then also carries the
    mixed norm built from those maxima. ``threshold = None`` never trips.
    """
    grid, qw = setup.grid, setup.quad.weights
    gn = intensity_gradient_norms(I, grid)
    grad_I = float(np.sqrt(np.sum(qw * gn**2)))
    running = None
    if running_max is not None:
        np.maximum(running_max, gn, out=running_max)
        running = float(np.sqrt(np.sum(qw * running_max**2)))
    rho_inf = float(np.max(np.abs(rho)))
    theta_inf = float(np.max(np.abs(theta)))
    G = effective_flux(u, eos_pressure(rho, theta, p), p, grid)
    om = vorticity(u, grid)
    d = ops.div(u, grid)
    om_mag = np.sqrt(np.sum(om**2, axis=0))
    bkm = float(np.max(np.abs(d)) + np.max(om_mag))
    composite = grad_I + rho_inf + theta_inf
    tripped = threshold is not None and composite > threshold
    return BlowupReport(grad_I, rho_inf, theta_inf, (ops.lp_norm(G, grid, 2), ops.lp_norm(G, grid, np.inf)),
                        (ops.lp_norm(om, grid, 2), ops.lp_norm(om, grid, np.inf)), bkm, composite, tripped, running)


def bkm_ratio(u: np.ndarray, grid: SpatialGrid, q: float = 6.0) -> dict:
    """Both sides of the logarithmic gradient bound, without the unknown constant."""
    J = ops.jacobian(u, grid)
    lhs = float(np.max(np.sqrt(np.sum(J**2, axis=(0, 1)))))
    hess = np.zeros((3, 3, 3) + grid.shape)
    for i in range(3):
        for j in range(grid.dim):
            for k in range(grid.dim):
                hess[i, j, k] = ops.partial(J[i, j], grid, k)
    d2 = ops.lp_norm(hess, grid, q)
    om = ops.curl(u, grid)
    core = float(np.max(np.abs(ops.div(u, grid))) + np.max(np.sqrt(np.sum(om**2, axis=0))))
    rhs = core * math.log(math.e + d2) + ops.lp_norm(J, grid, 2) + 1.0
    return {"lhs": lhs, "rhs_core": rhs, "ratio": lhs / rhs}


def poincare_ratio(F: np.ndarray, rho: np.ndarray, grid: SpatialGrid) -> float:
    """``|F|_6 / (|sqrt(rho) F|_2 + (1 + |rho|_2) |grad F|_2)``."""
    den = ops.lp_norm(np.sqrt(rho) * F, grid, 2) + (1 + ops.lp_norm(rho, grid, 2)) * ops.lp_norm(ops.grad(F, grid), grid, 2)
    return ops.lp_norm(F, grid, 6) / den


# ---------------------------------------------------------------------------
# energy ledger
# ---------------------------------------------------------------------------


def total_energy(it: Iterate, setup: rad.RadiationSetup, p: PhysicalParams) -> float:
    """``sum vol (rho (|u|^2 / 2 + c_v theta) + E_r)``."""
    grid = setup.grid
    E_r = rad.radiation_moments(it.I, setup.quad, setup.c_light).E_r
    dens = it.rho * (0.5 * np.sum(it.u**2, axis=0) + p.c_v * it.theta) + E_r
    return float(np.sum(dens)) * grid.cell_volume


def radiative_outflow(I: np.ndarray, setup: rad.RadiationSetup) -> float:
    """Power leaving through the walls: sum over faces and outgoing ordinates of ``qw I Omega.n``.

    Wall intensities come from second-order extrapolation of cell values.
    Incoming ordinates carry zero intensity on the walls and contribute
    nothing.
    """
    grid, q = setup.grid, setup.quad
    total = 0.0
    for a in range(grid.dim):
        lo, hi = ops.wall_values(I, grid, a)  # (G, M, *face shape)
        area = grid.face_area(a)
        for m in range(q.n_ordinates):
            on = q.ordinates[m, a]
            if on > 0:
                total += on * area * float(np.sum(q.weights[:, m].reshape((-1,) + (1,) * (hi.ndim - 2)) * hi[:, m]))
            elif on < 0:
                total += -on * area * float(np.sum(q.weights[:, m].reshape((-1,) + (1,) * (lo.ndim - 2)) * lo[:, m]))
    return total


@dataclass(frozen=True)
class EnergyLedger:
    E_prev: float
    E_next: float
    outflow: float
    residual: float


def energy_ledger(prev: Iterate, nxt: Iterate, dt: float, setup: rad.RadiationSetup, p: PhysicalParams) -> EnergyLedger:
    """Rate residual ``(E_next - E_prev) / dt + outflow`` of the total energy.

    Material walls are impermeable and insulated, so the only boundary term
    is radiation leaving through the transparent walls (time-averaged over
    the step).
    """
    E0 = total_energy(prev, setup, p)
    E1 = total_energy(nxt, setup, p)
    out = 0.5 * (radiative_outflow(prev.I, setup) + radiative_outflow(nxt.I, setup))
    return EnergyLedger(E0, E1, out, (E1 - E0) / dt + out)
