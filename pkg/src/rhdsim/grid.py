"""Phase-space containers: physical constants, the spatial box grid, the
angle x frequency quadrature and the fluid state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_MAX_CELLS = 1 << 20


@dataclass(frozen=True)
class PhysicalParams:
    """Scalar constants of the model.

    Construction never raises; use :func:`validate_parameters` (or
    :meth:`checked`) to test the admissibility constraints.
    """

    mu: float = 1.0
    lam: float = 0.0
    kappa: float = 1.0
    R: float = 1.0
    c_v: float = 1.5
    gamma: float = 5.0 / 3.0
    c_light: float = 10.0

    def checked(self, strict_blowup: bool = False) -> "PhysicalParams":
        report = validate_parameters(self, strict_blowup)
        if not report.ok:
            raise ValueError("invalid physical parameters: " + "; ".join(report.failures()))
        return self


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [f"{c.name} ({c.detail})" if c.detail else c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_parameters(p: PhysicalParams, strict_blowup: bool = False) -> ValidationReport:
    """Check the admissibility constraints on ``p``.

    ``strict_blowup`` adds ``lambda < 3 mu``, the extra restriction under
    which the blow-up criterion is known to hold.
    """
    checks = [
        Check("mu > 0", p.mu > 0, f"mu={p.mu!r}"),
        Check("kappa > 0", p.kappa > 0, f"kappa={p.kappa!r}"),
        Check("R > 0", p.R > 0, f"R={p.R!r}"),
        Check("c_v > 0", p.c_v > 0, f"c_v={p.c_v!r}"),
        Check("gamma > 1", p.gamma > 1, f"gamma={p.gamma!r}"),
        Check("c_light > 0", p.c_light > 0, f"c_light={p.c_light!r}"),
        Check("3*lambda + 2*mu >= 0", 3 * p.lam + 2 * p.mu >= 0, f"3*lambda+2*mu={3 * p.lam + 2 * p.mu!r}"),
    ]
    if p.c_v > 0:
        lhs, rhs = p.gamma - 1.0, p.R / p.c_v
        ok = abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))
    else:
        ok = False
    checks.append(Check("gamma - 1 = R / c_v", ok, f"gamma-1={p.gamma - 1.0!r}, R/c_v={p.R / p.c_v if p.c_v else float('nan')!r}"))
    if strict_blowup:
        checks.append(Check("lambda < 3 mu", p.lam < 3 * p.mu, f"lambda={p.lam!r}, 3*mu={3 * p.mu!r}"))
    return ValidationReport(tuple(checks))


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred grid on the box ``[0, L_1] x ... x [0, L_dim]``.

    Axes beyond ``dim`` are inactive (slab symmetry): fields carry no data
    along them and every derivative in those directions is zero.
    """

    cells: tuple[int, ...]
    lengths: tuple[float, ...]
    max_cells: int = DEFAULT_MAX_CELLS

    def __post_init__(self):
        cells = tuple(int(n) for n in self.cells)
        lengths = tuple(float(L) for L in self.lengths)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)
        if not 1 <= len(cells) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(cells)}")
        if len(lengths) != len(cells):
            raise ValueError("cells and lengths must have the same length")
        if any(n < 4 for n in cells):
            raise ValueError(f"need at least 4 cells per active axis, got {cells}")
        if any(not L > 0 for L in lengths):
            raise ValueError(f"box lengths must be positive, got {lengths}")
        if int(np.prod(cells)) > self.max_cells:
            raise ValueError(f"{int(np.prod(cells))} cells exceeds the configured maximum {self.max_cells}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def face_area(self, axis: int) -> float:
        """Area of one cell face normal to ``axis`` (1 in 1D)."""
        return float(np.prod([h for a, h in enumerate(self.spacing) if a != axis]))

    def centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays, one per active axis, each of ``shape``."""
        return tuple(np.meshgrid(*[self.centers(a) for a in range(self.dim)], indexing="ij"))

    def refined(self, factor: int = 2) -> "SpatialGrid":
        return SpatialGrid(tuple(n * factor for n in self.cells), self.lengths, self.max_cells * factor**self.dim)

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(tuple(lead) + self.shape)


@dataclass(frozen=True, eq=False)
class AngularFrequencyQuadrature:
    """Discrete ordinates on the sphere times frequency groups.

    ``weights`` is the combined ``(G, M)`` array ``q_g * w_m``.
    """

    ordinates: np.ndarray
    ang_weights: np.ndarray
    freq_nodes: np.ndarray
    freq_weights: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        om = np.asarray(self.ordinates, dtype=float).reshape(-1, 3)
        w = np.asarray(self.ang_weights, dtype=float).ravel()
        v = np.asarray(self.freq_nodes, dtype=float).ravel()
        q = np.asarray(self.freq_weights, dtype=float).ravel()
        if len(w) != len(om):
            raise ValueError("one angular weight per ordinate required")
        if len(q) != len(v):
            raise ValueError("one frequency weight per node required")
        if np.any(w <= 0) or np.any(q <= 0):
            raise ValueError("quadrature weights must be positive")
        if np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("frequency nodes must be positive and strictly increasing")
        if np.max(np.abs(np.linalg.norm(om, axis=1) - 1.0)) > 1e-14:
            raise ValueError("ordinates must be unit vectors")
        for name, arr in (("ordinates", om), ("ang_weights", w), ("freq_nodes", v), ("freq_weights", q)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        qw = np.outer(q, w)
        qw.setflags(write=False)
        object.__setattr__(self, "weights", qw)

    @classmethod
    def product(cls, n_polar: int, n_azimuth: int, freq_nodes: Sequence[float], freq_weights: Sequence[float]):
        """Gauss-Legendre in cos(polar angle) times the uniform rule in azimuth."""
        if n_polar < 1 or n_azimuth < 2:
            raise ValueError("need n_polar >= 1 and n_azimuth >= 2")
        mu, wmu = np.polynomial.legendre.leggauss(n_polar)
        phi = (np.arange(n_azimuth) + 0.5) * (2 * np.pi / n_azimuth)
        wphi = 2 * np.pi / n_azimuth
        sin_t = np.sqrt(1.0 - mu**2)
        om = np.array([[s * np.cos(p), s * np.sin(p), m] for m, s in zip(mu, sin_t) for p in phi])
        om /= np.linalg.norm(om, axis=1)[:, None]
        w = np.array([wm * wphi for wm in wmu for _ in phi])
        return cls(om, w, freq_nodes, freq_weights)

    @classmethod
    def build(cls, n_polar: int = 2, n_azimuth: int = 4, n_groups: int = 1, v_min: float = 0.5, v_max: float = 2.0):
        """Product angular rule with ``n_groups`` log-spaced frequency groups on [v_min, v_max]."""
        if not 0 < v_min < v_max:
            raise ValueError("need 0 < v_min < v_max")
        edges = np.geomspace(v_min, v_max, n_groups + 1)
        nodes = np.sqrt(edges[:-1] * edges[1:])
        return cls.product(n_polar, n_azimuth, nodes, np.diff(edges))

    @property
    def n_groups(self) -> int:
        return len(self.freq_nodes)

    @property
    def n_ordinates(self) -> int:
        return len(self.ordinates)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


# IntensityField values are plain arrays of shape (G, M, *grid.shape).


@dataclass(frozen=True, eq=False)
class FluidState:
    """Density, 3-component velocity and temperature on a grid.

    Arrays are copied and frozen on construction.
    """

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        for name in ("rho", "u", "theta"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.u.shape != (3,) + self.rho.shape or self.theta.shape != self.rho.shape:
            raise ValueError(f"inconsistent field shapes rho{self.rho.shape} u{self.u.shape} theta{self.theta.shape}")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("velocity must be finite")

    def replace(self, **kw) -> "FluidState":
        data = dict(rho=self.rho, u=self.u, theta=self.theta, time=self.time)
        data.update(kw)
        return FluidState(**data)
