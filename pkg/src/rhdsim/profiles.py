"""Named analytic profiles for initial data and emission sources.

Each profile is a small dict such as ``{"type": "gaussian", "amplitude": 1,
"width": 0.2}``; :func:`scalar_field` and friends turn it into an array on a
grid. ``PROFILE_KEYS`` lists the parameters each type accepts, which the
config loader uses to reject misspelt keys.
"""

from __future__ import annotations

import numpy as np

from .grid import AngularFrequencyQuadrature, SpatialGrid

PROFILE_KEYS = {
    "scalar": {
        "constant": {"value"},
        "gaussian": {"amplitude", "center", "width", "floor", "power", "offset"},
        "cosine": {"value", "amplitude", "modes"},
        "wall_vanishing": {"value", "power"},
    },
    "velocity": {
        "zero": set(),
        "sine_mode": {"amplitude", "component", "modes"},
        "linear": {"slope", "component", "axis"},
    },
    "intensity": {
        "zero": set(),
        "isotropic": {"value", "shape"},
        "beam": {"value", "ordinate", "group", "shape"},
    },
}


def _require(spec: dict, kind: str) -> str:
    t = spec.get("type")
    table = PROFILE_KEYS[kind]
    if t not in table:
        raise ValueError(f"unknown {kind} profile type {t!r}; choose from {sorted(table)}")
    extra = set(spec) - table[t] - {"type"}
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} for {kind} profile {t!r}")
    return t


def _center(spec, grid):
    c = spec.get("center")
    if c is None:
        return [0.5 * L for L in grid.lengths]
    c = list(c)
    if len(c) != grid.dim:
        raise ValueError(f"profile center needs {grid.dim} coordinates, got {len(c)}")
    return c


def scalar_field(spec: dict, grid: SpatialGrid, mesh=None) -> np.ndarray:
    """Scalar profile on the cell centres (or on ``mesh`` if given).

    ``gaussian``: ``max(0, a exp(-|x - x0|^2 / w^2) - floor)^power + offset``.
    A positive floor leaves a vacuum exterior; ``power = 2`` makes the
    density vanish quadratically at the vacuum edge.
    """
    t = _require(spec, "scalar")
    x = grid.mesh() if mesh is None else mesh
    shape = x[0].shape
    if t == "constant":
        return np.full(shape, float(spec.get("value", 1.0)))
    if t == "gaussian":
        c = _center(spec, grid)
        r2 = sum((x[a] - c[a]) ** 2 for a in range(grid.dim))
        w = float(spec.get("width", 0.2))
        core = np.maximum(0.0, float(spec.get("amplitude", 1.0)) * np.exp(-r2 / w**2) - float(spec.get("floor", 0.0)))
        return core ** float(spec.get("power", 1.0)) + float(spec.get("offset", 0.0))
    if t == "cosine":
        modes = list(spec.get("modes", [1] * grid.dim))
        out = np.ones(shape)
        for a in range(grid.dim):
            out = out * np.cos(modes[a] * np.pi * x[a] / grid.lengths[a])
        return float(spec.get("value", 1.0)) + float(spec.get("amplitude", 1.0)) * out
    # wall_vanishing: value * prod sin(pi x / L)^power
    out = np.ones(shape)
    for a in range(grid.dim):
        out = out * np.abs(np.sin(np.pi * x[a] / grid.lengths[a])) ** float(spec.get("power", 2.0))
    return float(spec.get("value", 1.0)) * out


def velocity_field(spec: dict, grid: SpatialGrid) -> np.ndarray:
    """Velocity profile; ``sine_mode`` vanishes on every wall."""
    t = _require(spec, "velocity")
    u = grid.zeros(3)
    if t == "zero":
        return u
    x = grid.mesh()
    comp = int(spec.get("component", 0))
    if not 0 <= comp < 3:
        raise ValueError("velocity component must be 0, 1 or 2")
    if t == "sine_mode":
        modes = list(spec.get("modes", [1] * grid.dim))
        f = np.ones(grid.shape)
        for a in range(grid.dim):
            f = f * np.sin(modes[a] * np.pi * x[a] / grid.lengths[a])
        u[comp] = float(spec.get("amplitude", 1.0)) * f
    else:
        u[comp] = float(spec.get("slope", 1.0)) * x[int(spec.get("axis", 0))]
    return u


def intensity_field(spec: dict, grid: SpatialGrid, quad: AngularFrequencyQuadrature) -> np.ndarray:
    """Intensity profile of shape ``(G, M, *grid.shape)``.

    ``shape`` is an optional scalar profile multiplying the value in space.
    """
    t = _require(spec, "intensity")
    I = np.zeros((quad.n_groups, quad.n_ordinates) + grid.shape)
    if t == "zero":
        return I
    space = scalar_field(spec["shape"], grid) if "shape" in spec else np.ones(grid.shape)
    value = float(spec.get("value", 1.0))
    if t == "isotropic":
        I[...] = value * space
    else:
        m = int(spec.get("ordinate", 0))
        if not 0 <= m < quad.n_ordinates:
            raise ValueError(f"beam ordinate {m} outside 0..{quad.n_ordinates - 1}")
        groups = range(quad.n_groups) if spec.get("group") is None else [int(spec["group"])]
        for gi in groups:
            I[gi, m] = value * space
    if np.any(I < 0):
        raise ValueError("initial intensity must be nonnegative")
    return I


def emission_function(spec: dict | None, grid: SpatialGrid):
    """Emission ``S(v, t, mesh)`` from a scalar profile (independent of v and t)."""
    if spec is None:
        spec = {"type": "constant", "value": 0.0}

    def emission(v, t, mesh):
        base = scalar_field(spec, grid, mesh)
        return np.broadcast_to(base, (len(v),) + base.shape)

    return emission
