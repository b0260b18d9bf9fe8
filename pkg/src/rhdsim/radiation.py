"""Collision operator, radiation moments and the characteristic transport sweep.

Intensities are arrays of shape ``(G, M, *grid.shape)``: frequency group,
ordinate, cell. Coefficients are always sampled at the quadrature nodes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import interp
from .grid import AngularFrequencyQuadrature, Check, SpatialGrid

THETA_FLOOR = 1e-8


class CoefficientError(ValueError):
    """A coefficient model produced an inadmissible (negative) sample."""


class TransportCFLError(ValueError):
    """The photon path per (sub)step is too long for 2-point quadrature."""


EmissionFn = Callable[[np.ndarray, float, tuple], np.ndarray]
KernelFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def constant_kernel(value: float) -> KernelFn:
    def kernel(v_from, v_to, cos_angle):
        return np.full(np.broadcast(v_from, v_to, cos_angle).shape, float(value))

    kernel.constant = float(value)
    return kernel


def zero_emission(v, t, mesh):
    return np.zeros((len(v),) + mesh[0].shape)


@dataclass(eq=False)
class CoefficientModel:
    """Absorption, scattering and emission coefficients.

    ``sbar_s(v_from, v_to, cos)`` is the in-scattering factor (``sigma_s =
    sbar_s * rho``); ``sbar_s_prime`` the out-scattering factor. When
    ``sbar_s_prime`` is not given it is the same kernel with its frequency
    arguments swapped. ``emission(v, t, mesh)`` returns ``(G, *shape)``.
    Subclasses define :meth:`sigma`.
    """

    sbar_s: KernelFn = field(default_factory=lambda: constant_kernel(0.0))
    sbar_s_prime: KernelFn | None = None
    emission: EmissionFn = zero_emission
    name: str = "base"
    _tables: dict = field(default_factory=dict, repr=False)

    def sigma(self, quad: AngularFrequencyQuadrature, rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sigma_theta(self, quad: AngularFrequencyQuadrature, theta: np.ndarray) -> np.ndarray:
        return np.zeros((quad.n_groups, 1) + np.shape(theta))

    @property
    def theta_only(self) -> bool:
        """True when sigma depends on (v, Omega, theta) only."""
        return True

    def out_kernel(self, v_from, v_to, cos_angle):
        if self.sbar_s_prime is not None:
            return self.sbar_s_prime(v_from, v_to, cos_angle)
        return self.sbar_s(v_to, v_from, cos_angle)

    def scattering_tables(self, quad: AngularFrequencyQuadrature):
        """``(K_in, H_out)`` with the quadrature weights folded in.

        ``K_in[g, m, g2, m2] = q_g2 w_m2 (v_g / v_g2) sbar_s(v_g2 -> v_g, Om_m2 . Om_m)``
        and ``H_out[g, m] = sum q_g2 w_m2 sbar_s'(v_g -> v_g2, Om_m . Om_m2)``.
        Cached per quadrature object.
        """
        key = id(quad)
        hit = self._tables.get(key)
        if hit is not None and hit[0] is quad:
            return hit[1], hit[2]
        v = quad.freq_nodes
        kin, kout = self.raw_kernels(quad)
        if np.any(kin < 0) or np.any(kout < 0):
            raise CoefficientError(f"{self.name}: negative scattering kernel sample")
        qw2 = quad.weights[None, None, :, :]
        K_in = qw2 * (v[:, None, None, None] / v[None, None, :, None]) * kin
        H_out = np.sum((qw2 * kout).reshape(kin.shape[0], kin.shape[1], -1), axis=-1)
        K_in.setflags(write=False)
        H_out.setflags(write=False)
        self._tables[key] = (quad, K_in, H_out)
        return K_in, H_out

    def raw_kernels(self, quad: AngularFrequencyQuadrature):
        """Unweighted kernel samples ``(kin, kout)`` on the (g, m, g2, m2) grid."""
        v = quad.freq_nodes
        cos = np.clip(quad.ordinates @ quad.ordinates.T, -1.0, 1.0)  # cos[m, m2]
        vg, vg2, c4 = v[:, None, None, None], v[None, None, :, None], cos[None, :, None, :]
        shape = (len(v), len(cos), len(v), len(cos))
        kin = np.broadcast_to(self.sbar_s(vg2, vg, c4), shape).astype(float)
        kout = np.broadcast_to(self.out_kernel(vg, vg2, c4), shape).astype(float)
        return kin, kout

    def source(self, quad: AngularFrequencyQuadrature, t: float, grid: SpatialGrid) -> np.ndarray:
        S = np.asarray(self.emission(quad.freq_nodes, t, grid.mesh()), dtype=float)
        S = np.broadcast_to(S, (quad.n_groups,) + grid.shape)
        if np.any(S < 0):
            raise CoefficientError(f"{self.name}: negative emission sample (min {S.min():.3e})")
        return S


@dataclass(eq=False)
class ConstantCoefficients(CoefficientModel):
    sigma0: float = 0.0
    name: str = "constant"

    def sigma(self, quad, rho, theta):
        if self.sigma0 < 0:
            raise CoefficientError(f"constant absorption must be >= 0, got {self.sigma0}")
        return np.full((1, 1) + np.shape(rho), float(self.sigma0))


@dataclass(eq=False)
class ComptonCoefficients(CoefficientModel):
    """``sigma = D1 theta^-1/2 exp(-(D2 / theta^1/2) ((v - v0)/v0)^2)``.

    Temperatures are floored at ``theta_floor`` before evaluation.
    """

    D1: float = 1.0
    D2: float = 1.0
    v0: float = 1.0
    theta_floor: float = THETA_FLOOR
    name: str = "compton"

    def __post_init__(self):
        if not (self.D1 > 0 and self.D2 > 0 and self.v0 > 0):
            raise ValueError(f"Compton parameters must be positive (D1={self.D1}, D2={self.D2}, v0={self.v0})")

    def _shape_factor(self, quad):
        v = quad.freq_nodes
        return (self.D2 * ((v - self.v0) / self.v0) ** 2)[:, None]

    def sigma_v_theta(self, v, theta):
        th = np.maximum(theta, self.theta_floor)
        a = self.D2 * ((v - self.v0) / self.v0) ** 2
        return self.D1 / np.sqrt(th) * np.exp(-a / np.sqrt(th))

    def sigma(self, quad, rho, theta):
        th = np.maximum(np.asarray(theta, dtype=float), self.theta_floor)
        a = self._shape_factor(quad).reshape((-1, 1) + (1,) * th.ndim)
        s = np.sqrt(th)[None, None]
        return self.D1 / s * np.exp(-a / s)

    def sigma_theta(self, quad, theta):
        """Analytic d sigma / d theta (zero below the floor)."""
        th = np.asarray(theta, dtype=float)
        thf = np.maximum(th, self.theta_floor)
        a = self._shape_factor(quad).reshape((-1, 1) + (1,) * th.ndim)
        s = np.sqrt(thf)[None, None]
        d = self.D1 * np.exp(-a / s) * thf[None, None] ** -1.5 * (-0.5 + a / (2 * s))
        return np.where(th[None, None] > self.theta_floor, d, 0.0)


@dataclass(eq=False)
class TabulatedCoefficients(CoefficientModel):
    """Absorption factor given per (group, ordinate)."""

    table: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    name: str = "tabulated"

    def sigma(self, quad, rho, theta):
        tab = np.asarray(self.table, dtype=float)
        if tab.shape != (quad.n_groups, quad.n_ordinates):
            raise CoefficientError(f"table shape {tab.shape} does not match quadrature ({quad.n_groups}, {quad.n_ordinates})")
        if np.any(tab < 0):
            raise CoefficientError("tabulated absorption has negative entries")
        return tab.reshape(tab.shape + (1,) * np.ndim(rho))

    @classmethod
    def from_csv(cls, path, n_groups: int, n_ordinates: int, **kw):
        """Read a ``g,m,sigma`` CSV (header line required)."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 3:
            raise ValueError(f"{path}: expected columns g,m,sigma")
        tab = np.full((n_groups, n_ordinates), np.nan)
        for g, m, s in data:
            gi, mi = int(g), int(m)
            if not (0 <= gi < n_groups and 0 <= mi < n_ordinates):
                raise ValueError(f"{path}: entry (g={gi}, m={mi}) outside the quadrature")
            tab[gi, mi] = s
        if np.isnan(tab).any():
            raise ValueError(f"{path}: table does not cover every (g, m) pair")
        return cls(table=tab, **kw)


def constant_model(sigma: float = 0.0, scattering: float = 0.0, scattering_out: float | None = None,
                   emission: EmissionFn = zero_emission) -> ConstantCoefficients:
    out = None if scattering_out is None else constant_kernel(scattering_out)
    return ConstantCoefficients(sbar_s=constant_kernel(scattering), sbar_s_prime=out, emission=emission, sigma0=sigma)


def compton_model(D1: float, D2: float, v0: float, sbar_s: float = 0.0, emission: EmissionFn = zero_emission,
                  theta_floor: float = THETA_FLOOR) -> ComptonCoefficients:
    return ComptonCoefficients(sbar_s=constant_kernel(sbar_s), emission=emission, D1=D1, D2=D2, v0=v0,
                               theta_floor=theta_floor)


@dataclass(frozen=True, eq=False)
class RadiationSetup:
    """Everything the radiation kernels need besides the fields."""

    grid: SpatialGrid
    quad: AngularFrequencyQuadrature
    coeffs: CoefficientModel
    c_light: float

    def expand(self, f: np.ndarray) -> np.ndarray:
        """Broadcast a spatial field against the (G, M) leading axes."""
        return np.asarray(f, dtype=float)[None, None]


def _weighted_sum(qw: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``sum_{g,m} qw[g,m] A[g,m,...]`` in a fixed order."""
    out = np.zeros(A.shape[2:])
    for g in range(A.shape[0]):
        for m in range(A.shape[1]):
            out += qw[g, m] * A[g, m]
    return out


def _scatter_in(K_in: np.ndarray, psi: np.ndarray) -> np.ndarray:
    G, M = K_in.shape[:2]
    flat = psi.reshape(G * M, -1)
    return (K_in.reshape(G * M, G * M) @ flat).reshape(psi.shape)


def collision_term(I: np.ndarray, rho: np.ndarray, theta: np.ndarray, setup: RadiationSetup, t: float = 0.0,
                   psi: np.ndarray | None = None) -> np.ndarray:
    """Net collision source ``A_r`` on every (g, m, cell).

    ``psi`` replaces ``I`` inside the in-scattering integral (lagged
    iterate); by default the same intensity is used throughout.
    """
    q = setup.quad
    K_in, H_out = setup.coeffs.scattering_tables(q)
    sig = setup.coeffs.sigma(q, rho, theta)
    if np.any(sig < 0):
        raise CoefficientError(f"{setup.coeffs.name}: negative absorption sample")
    S = setup.coeffs.source(q, t, setup.grid)[:, None]
    r = setup.expand(rho)
    inflow = _scatter_in(K_in, I if psi is None else psi)
    Hout = H_out.reshape(H_out.shape + (1,) * setup.grid.dim)
    return S - sig * r * I + r * inflow - r * Hout * I


@dataclass(frozen=True)
class RadiationMoments:
    E_r: np.ndarray
    F_r: np.ndarray
    P_r: np.ndarray


def radiation_moments(I: np.ndarray, quad: AngularFrequencyQuadrature, c_light: float) -> RadiationMoments:
    qw = quad.weights
    om = quad.ordinates
    E = _weighted_sum(qw, I) / c_light
    F = np.stack([_weighted_sum(qw * om[None, :, i], I) for i in range(3)])
    P = np.empty((3, 3) + I.shape[2:])
    for i in range(3):
        for j in range(i, 3):
            P[i, j] = _weighted_sum(qw * (om[:, i] * om[:, j])[None], I) / c_light
            P[j, i] = P[i, j]
    return RadiationMoments(E, F, P)


def radiation_force(I, rho, theta, setup: RadiationSetup, t: float = 0.0, psi=None) -> np.ndarray:
    """``-(1/c) sum qw A_r Omega`` per cell."""
    A = collision_term(I, rho, theta, setup, t, psi)
    qw, om = setup.quad.weights, setup.quad.ordinates
    return np.stack([-_weighted_sum(qw * om[None, :, i], A) / setup.c_light for i in range(3)])


def radiation_heating(I, rho, theta, u, setup: RadiationSetup, t: float = 0.0, psi=None) -> np.ndarray:
    """``N_r = sum qw (1 - u.Omega / c) A_r`` per cell."""
    A = collision_term(I, rho, theta, setup, t, psi)
    qw, om = setup.quad.weights, setup.quad.ordinates
    udo = np.einsum("mi,i...->m...", om, u)  # (M, *shape)
    return _weighted_sum(qw, (1.0 - udo[None] / setup.c_light) * A)


# ---------------------------------------------------------------------------
# transport sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportResult:
    intensity: np.ndarray
    clamped: float  # magnitude of the largest negative value removed
    substeps: int


def transport_coefficients(rho, theta, psi, setup: RadiationSetup, t: float):
    """Frozen ``(H, F)`` fields for one transport step."""
    q = setup.quad
    K_in, H_out = setup.coeffs.scattering_tables(q)
    sig = setup.coeffs.sigma(q, rho, theta)
    if np.any(sig < 0):
        raise CoefficientError(f"{setup.coeffs.name}: negative absorption sample")
    r = setup.expand(rho)
    Hout = H_out.reshape(H_out.shape + (1,) * setup.grid.dim)
    H = np.broadcast_to((sig + Hout) * r, (q.n_groups, q.n_ordinates) + setup.grid.shape)
    F = setup.coeffs.source(q, t, setup.grid)[:, None] + r * _scatter_in(K_in, psi)
    return np.ascontiguousarray(H), F


def substep_count(c_light: float, dt: float, grid: SpatialGrid, cfl_max: float, substeps) -> int:
    limit = cfl_max * grid.min_spacing
    if substeps in (None, "auto"):
        return max(1, math.ceil(c_light * dt / limit * (1 - 1e-12)))
    n = int(substeps)
    if n < 1:
        raise ValueError("transport substeps must be >= 1")
    if c_light * dt / n > limit * (1 + 1e-12):
        raise TransportCFLError(
            f"c*dt/substeps = {c_light * dt / n:.4g} exceeds {cfl_max} x min cell size {grid.min_spacing:.4g}"
        )
    return n


def sweep(I: np.ndarray, H: np.ndarray, F: np.ndarray, grid: SpatialGrid, quad: AngularFrequencyQuadrature,
          c_light: float, dt: float, substeps=None, cfl_max: float = 0.9, periodic: bool = False,
          workers: int = 1) -> TransportResult:
    """Advance ``I_t/c + Omega.grad I + H I = F`` with frozen ``H``, ``F``.

    Each (sub)step follows the straight photon path back from every cell
    centre for the step length, or up to the inflow wall if the path leaves
    the box first (there the upstream intensity is zero). Attenuation and
    source integrals use the trapezoid rule between foot and cell.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_sub = substep_count(c_light, dt, grid, cfl_max, substeps)
    h = dt / n_sub
    mesh = grid.mesh()

    def one_ordinate(m: int):
        om = quad.ordinates[m]
        if periodic:
            tau = np.full(grid.shape, h)
        else:
            tau = np.full(grid.shape, h)
            for a in range(grid.dim):
                speed = c_light * om[a]
                if speed > 0:
                    tau = np.minimum(tau, mesh[a] / speed)
                elif speed < 0:
                    tau = np.minimum(tau, (grid.lengths[a] - mesh[a]) / -speed)
        feet = [mesh[a] - c_light * om[a] * tau for a in range(grid.dim)]
        coords = [feet[a] / grid.spacing[a] - 0.5 for a in range(grid.dim)]
        Hm, Fm = H[:, m], F[:, m]
        if periodic:
            Hf = interp.periodic_linear(Hm, coords, grid)
            Ff = interp.periodic_linear(Fm, coords, grid)
        else:
            edge = [(None, None)] * grid.dim
            Hf = interp.face_linear(interp.pad_faces(Hm, grid.dim, edge), coords, grid)
            Ff = interp.face_linear(interp.pad_faces(Fm, grid.dim, edge), coords, grid)
            # inflow walls carry zero intensity; outflow walls are never reached
            inflow = [(0.0 if om[a] > 0 else None, 0.0 if om[a] < 0 else None) for a in range(grid.dim)]
        ct = c_light * tau
        att = np.exp(-0.5 * ct * (Hm + Hf))
        src = 0.5 * ct * (Fm + Ff * att)
        Im = I[:, m]
        for _ in range(n_sub):
            if periodic:
                up = interp.periodic_linear(Im, coords, grid)
            else:
                up = interp.face_linear(interp.pad_faces(Im, grid.dim, inflow), coords, grid)
            Im = up * att + src
        return Im

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(one_ordinate, range(quad.n_ordinates)))
    else:
        cols = [one_ordinate(m) for m in range(quad.n_ordinates)]
    out = np.stack(cols, axis=1)
    neg = float(-out.min()) if out.size and out.min() < 0 else 0.0
    np.maximum(out, 0.0, out=out)
    return TransportResult(out, neg, n_sub)


def transport_step(I, rho, theta, psi, setup: RadiationSetup, dt: float, t: float = 0.0, substeps=None,
                   cfl_max: float = 0.9, periodic: bool = False, workers: int = 1) -> TransportResult:
    """One transport step with coefficients frozen at ``(rho, theta, psi)``.

    ``t`` is the time at which the emission source is sampled (normally
    the end of the step).
    """
    H, F = transport_coefficients(rho, theta, psi, setup, t)
    return sweep(I, H, F, setup.grid, setup.quad, setup.c_light, dt, substeps, cfl_max, periodic, workers)


# ---------------------------------------------------------------------------
# coefficient admissibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientReport:
    values: dict
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_coefficients(coeffs: CoefficientModel, quad: AngularFrequencyQuadrature, alpha: float, beta: float,
                          rho_samples=(0.0, 1.0), theta_samples=(0.5, 1.0, 2.0)) -> CoefficientReport:
    """Discrete versions of the scattering integral bounds and absorption bounds.

    The kernels are taken to be independent of (t, x), so the gradient
    parts of the bounds vanish and the sup over (t, x) is the sample value.
    Absorption is sampled over the product of ``rho_samples`` and
    ``theta_samples``.
    """
    qw = quad.weights
    v = quad.freq_nodes
    kin, kout = coeffs.raw_kernels(quad)
    ratio2 = (v[:, None, None, None] / v[None, None, :, None]) ** 2
    inner_in = np.einsum("ab,gmab->gm", qw, ratio2 * kin**2)
    inner_out = np.einsum("ab,gmab->gm", qw, kout**2)
    inner_out1 = np.einsum("ab,gmab->gm", qw, np.abs(kout))
    values = {
        "scatter_in[lambda1=1]": float(np.sum(qw * inner_in)),
        "scatter_in[lambda1=1/2]": float(np.sum(qw * np.sqrt(inner_in))),
        "scatter_out[lambda2=1]": float(np.sum(qw * inner_out)),
        "scatter_out[lambda2=2]": float(np.sum(qw * inner_out**2)),
        "scatter_out_total_max": float(inner_out1.max()),
    }
    rr, tt = np.meshgrid(np.asarray(rho_samples, float), np.asarray(theta_samples, float), indexing="ij")
    sig = np.broadcast_to(coeffs.sigma(quad, rr, tt), (quad.n_groups, quad.n_ordinates) + rr.shape)
    sup = sig.reshape(quad.n_groups, quad.n_ordinates, -1).max(axis=-1)
    values["sigma_Linf"] = float(sup.max())
    values["sigma_L2"] = float(np.sqrt(np.sum(qw * sup**2)))
    dth = np.broadcast_to(np.abs(coeffs.sigma_theta(quad, tt)), sig.shape)
    values["sigma_theta_lipschitz"] = float(dth.max()) if dth.size else 0.0
    checks = [Check(k, v_ <= alpha, f"{v_:.6g} <= alpha={alpha}") for k, v_ in values.items()
              if k.startswith("scatter")]
    checks += [Check(k, values[k] <= beta, f"{values[k]:.6g} <= beta={beta}") for k in ("sigma_Linf", "sigma_L2")]
    checks.append(Check("kernels nonnegative", bool(np.all(kin >= 0) and np.all(kout >= 0))))
    return CoefficientReport(values, tuple(checks))
