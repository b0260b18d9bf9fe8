"""Successive approximation over the linearized subproblems, and time stepping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hydro
from . import radiation as rad
from .grid import FluidState, PhysicalParams, SpatialGrid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardConfig:
    tol_lambda: float = 1e-10
    max_iters: int = 20
    epsilon_weight: float = 1.0
    delta_vacuum: float = 0.0

    def __post_init__(self):
        if not self.tol_lambda > 0:
            raise ValueError("tol_lambda must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.epsilon_weight <= 1:
            raise ValueError("epsilon_weight must lie in (0, 1]")
        if self.delta_vacuum < 0:
            raise ValueError("delta_vacuum must be >= 0")


@dataclass(frozen=True)
class PicardReport:
    iterations: int
    lambdas: tuple[float, ...]
    converged: bool

    @property
    def ratios(self) -> tuple[float, ...]:
        lam = self.lambdas
        return tuple(lam[k + 1] / lam[k] for k in range(len(lam) - 1) if lam[k] > 0)


@dataclass(frozen=True, eq=False)
class Iterate:
    """One (I, rho, u, theta) tuple of the successive approximation."""

    I: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    @classmethod
    def from_state(cls, state: FluidState, I: np.ndarray) -> "Iterate":
        return cls(np.asarray(I, dtype=float), state.rho, state.u, state.theta)

    def to_state(self, time: float) -> FluidState:
        return FluidState(self.rho, self.u, self.theta, time)


@dataclass(frozen=True, eq=False)
class Model:
    """Discretization, physics and numerical options of one scenario."""

    setup: rad.RadiationSetup
    params: PhysicalParams
    bc: hydro.BoundaryConfig = hydro.BoundaryConfig()
    heating_sign: float = -1.0
    transport_substeps: int | str | None = "auto"
    transport_cfl: float = 0.9
    advect_cfl: float = 1.0
    check_tangency: bool = True
    workers: int = 1
    linear_rtol: float = 1e-10

    @property
    def grid(self) -> SpatialGrid:
        return self.setup.grid


def _density(model: Model, rho, w, dt, chars, t):
    return hydro.advect_density(rho, w, model.grid, dt, chars)


def _transport(model: Model, I, rho, theta, psi, dt, t):
    return rad.transport_step(I, rho, theta, psi, model.setup, dt, t, model.transport_substeps,
                              model.transport_cfl, workers=model.workers)


def _temperature(model: Model, theta, rho_new, w, u_frozen, N_r, dt, chars, t):
    return hydro.temperature_step(theta, rho_new, w, u_frozen, N_r, dt, model.params, model.grid, chars,
                                  model.linear_rtol)


def _momentum(model: Model, u, rho_new, w, P_m, f_rad, dt, chars, t):
    return hydro.momentum_step(u, rho_new, w, P_m, f_rad, dt, model.params, model.grid, model.bc, chars,
                               model.linear_rtol)


@dataclass(frozen=True)
class SubproblemSolvers:
    """The four linear solvers; replaceable for testing."""

    density: Callable = _density
    transport: Callable = _transport
    temperature: Callable = _temperature
    momentum: Callable = _momentum


@dataclass
class SweepInfo:
    transport_clamp: float = 0.0
    theta_clamp: float = 0.0


def picard_sweep(frozen: Iterate, start: Iterate, dt: float, model: Model, t: float = 0.0,
                 solvers: SubproblemSolvers = SubproblemSolvers(), info: SweepInfo | None = None) -> Iterate:
    """One pass over the linear subproblems: density, intensity, temperature, velocity.

    ``frozen`` supplies the lagged velocity, temperature and scattering
    source; ``start`` the data at the beginning of the step; ``t`` is the
    start time. Temperatures dipping below zero (strong radiative cooling)
    are clamped and the amount recorded in ``info``.
    """
    grid = model.grid
    t_new = t + dt
    # frozen.u comes from the data or a momentum solve; the run loop checks the data once
    chars = hydro.trace_characteristics(frozen.u, grid, dt, cfl=model.advect_cfl, check_tangency=False)
    rho = solvers.density(model, start.rho, frozen.u, dt, chars, t)
    tr = solvers.transport(model, start.I, rho, frozen.theta, frozen.I, dt, t_new)
    I = tr.intensity if isinstance(tr, rad.TransportResult) else tr
    N_r = model.heating_sign * rad.radiation_heating(I, rho, frozen.theta, frozen.u, model.setup, t_new)
    theta = solvers.temperature(model, start.theta, rho, frozen.u, frozen.u, N_r, dt, chars, t)
    neg = float(-theta.min()) if theta.min() < 0 else 0.0
    theta = np.maximum(theta, 0.0)
    P = hydro.eos_pressure(rho, theta, model.params)
    f = rad.radiation_force(I, rho, theta, model.setup, t_new)
    u = solvers.momentum(model, start.u, rho, frozen.u, P, f, dt, chars, t)
    if info is not None:
        info.transport_clamp = max(info.transport_clamp, tr.clamped if isinstance(tr, rad.TransportResult) else 0.0)
        info.theta_clamp = max(info.theta_clamp, neg)
    return Iterate(I, rho, u, theta)


def contraction_metric(a: Iterate, b: Iterate, epsilon_weight: float, grid: SpatialGrid, weights: np.ndarray) -> float:
    """``|I_a - I_b|^2 + |rho_a - rho_b|^2 + eps |sqrt(rho_a) (theta_a - theta_b)|^2 + |sqrt(rho_a)(u_a - u_b)|^2``.

    Squared L^2 norms with midpoint weights; the intensity norm also carries
    the quadrature weights ``weights[g, m]``. The density weight is taken
    from ``a``.
    """
    if a.I.shape != b.I.shape or a.rho.shape != b.rho.shape:
        raise ValueError("iterates live on different discretizations")
    vol = grid.cell_volume
    dI = (a.I - b.I) ** 2
    termI = float(np.sum(weights * dI.reshape(dI.shape[:2] + (-1,)).sum(axis=-1))) * vol
    term_rho = float(np.sum((a.rho - b.rho) ** 2)) * vol
    term_th = float(np.sum(a.rho * (a.theta - b.theta) ** 2)) * vol
    term_u = float(np.sum(a.rho * np.sum((a.u - b.u) ** 2, axis=0))) * vol
    return termI + term_rho + epsilon_weight * term_th + term_u


def picard_solve(state: Iterate, dt: float, cfg: PicardConfig, model: Model, t: float = 0.0,
                 solvers: SubproblemSolvers = SubproblemSolvers(), info: SweepInfo | None = None):
    """Iterate sweeps from ``frozen = state`` until the metric drops below tolerance.

    Returns ``(iterate, report)``; non-convergence is reported, not raised.
    """
    frozen = state
    lambdas = []
    converged = False
    for _ in range(cfg.max_iters):
        new = picard_sweep(frozen, state, dt, model, t, solvers, info)
        lam = contraction_metric(new, frozen, cfg.epsilon_weight, model.grid, model.setup.quad.weights)
        lambdas.append(lam)
        frozen = new
        if lam < cfg.tol_lambda:
            converged = True
            break
    return frozen, PicardReport(len(lambdas), tuple(lambdas), converged)


def regularize_vacuum(rho0: np.ndarray, delta: float) -> np.ndarray:
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return np.asarray(rho0, dtype=float) + delta


@dataclass
class StepOutcome:
    iterate: Iterate
    dt_used: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    info: SweepInfo = field(default_factory=SweepInfo)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.reports)


def advance(state: Iterate, t: float, dt: float, cfg: PicardConfig, model: Model, max_halvings: int = 0,
            solvers: SubproblemSolvers = SubproblemSolvers()) -> StepOutcome:
    """Advance by ``dt``; on Picard non-convergence retry as two half steps."""
    info = SweepInfo()
    new, report = picard_solve(state, dt, cfg, model, t, solvers, info)
    if report.converged or max_halvings <= 0:
        return StepOutcome(new, [dt], [report], info)
    log.info("picard did not converge at t=%g with dt=%g; halving", t, dt)
    first = advance(state, t, dt / 2, cfg, model, max_halvings - 1, solvers)
    second = advance(first.iterate, t + dt / 2, dt / 2, cfg, model, max_halvings - 1, solvers)
    merged = SweepInfo(max(first.info.transport_clamp, second.info.transport_clamp),
                       max(first.info.theta_clamp, second.info.theta_clamp))
    return StepOutcome(second.iterate, first.dt_used + second.dt_used, first.reports + second.reports, merged)

