"""Point evaluation of cell-centred fields at arbitrary (foot) positions.

Positions are given in fractional cell-index units: ``s = x / h - 0.5``, so
cell ``i`` sits at ``s = i`` and the walls at ``s = -0.5`` and ``n - 0.5``.
"""

from __future__ import annotations

import itertools

import numpy as np

from .grid import SpatialGrid


def index_coords(points: np.ndarray, grid: SpatialGrid) -> list[np.ndarray]:
    """Map physical coordinates (first axis = component) to fractional indices."""
    return [points[a] / grid.spacing[a] - 0.5 for a in range(grid.dim)]


def _cubic_axis(s: np.ndarray, n: int):
    # 4-point Lagrange stencil, shifted inward near the walls so no ghost
    # data is needed; beyond the outer nodes it extrapolates the cubic.
    i0 = np.clip(np.floor(s).astype(np.intp) - 1, 0, n - 4)
    t = s - i0
    w = np.stack(
        [
            -(t - 1) * (t - 2) * (t - 3) / 6.0,
            t * (t - 2) * (t - 3) / 2.0,
            -t * (t - 1) * (t - 3) / 2.0,
            t * (t - 1) * (t - 2) / 6.0,
        ],
        axis=-1,
    )
    idx = i0[..., None] + np.arange(4)
    return idx, w


def _cubic_axis_derivative(s: np.ndarray, n: int):
    i0 = np.clip(np.floor(s).astype(np.intp) - 1, 0, n - 4)
    t = s - i0
    a, b, c, d = t, t - 1, t - 2, t - 3
    w = np.stack(
        [
            -(b * c + b * d + c * d) / 6.0,
            (c * d + a * d + a * c) / 2.0,
            -(b * d + a * d + a * b) / 2.0,
            (b * c + a * c + a * b) / 6.0,
        ],
        axis=-1,
    )
    return i0[..., None] + np.arange(4), w


def _linear_axis(s: np.ndarray, n: int):
    i0 = np.clip(np.floor(s).astype(np.intp), 0, n - 2)
    t = np.clip(s - i0, 0.0, 1.0)
    return np.stack([i0, i0 + 1], axis=-1), np.stack([1.0 - t, t], axis=-1)


def _gather(f: np.ndarray, stencils) -> np.ndarray:
    """Tensor-product sum over per-axis (index, weight) stencils.

    The summation order is fixed, so results are reproducible bit for bit.
    """
    k = [w.shape[-1] for _, w in stencils]
    out = None
    for combo in itertools.product(*[range(kk) for kk in k]):
        wt = stencils[0][1][..., combo[0]]
        for a in range(1, len(stencils)):
            wt = wt * stencils[a][1][..., combo[a]]
        ix = tuple(stencils[a][0][..., combo[a]] for a in range(len(stencils)))
        term = wt * f[(Ellipsis,) + ix]
        out = term if out is None else out + term
    return out


def cubic(f: np.ndarray, coords: list[np.ndarray], grid: SpatialGrid) -> np.ndarray:
    """Tensor-product cubic Lagrange interpolation of ``f`` at index coords.

    ``f`` may carry leading component axes; they are preserved.
    """
    return _gather(f, [_cubic_axis(s, n) for s, n in zip(coords, grid.cells)])


def cubic_derivative(f: np.ndarray, coords: list[np.ndarray], grid: SpatialGrid, axis: int) -> np.ndarray:
    """``d f / d x_axis`` of the same tensor-product cubic interpolant."""
    st = [_cubic_axis_derivative(s, n) if a == axis else _cubic_axis(s, n)
          for a, (s, n) in enumerate(zip(coords, grid.cells))]
    return _gather(f, st) / grid.spacing[axis]


def linear(f: np.ndarray, coords: list[np.ndarray], grid: SpatialGrid) -> np.ndarray:
    """Multilinear interpolation, clamped to the outermost cell centres."""
    return _gather(f, [_linear_axis(s, n) for s, n in zip(coords, grid.cells)])


def _face_linear_axis(s: np.ndarray, n: int):
    # nodes of the face-padded array: 0 = low wall, i + 1 = cell i, n + 1 = high wall
    fl = np.floor(s)
    lo = np.where(s < 0, 0, np.where(s >= n - 1, n, fl.astype(np.intp) + 1))
    t = np.where(s < 0, (s + 0.5) / 0.5, np.where(s >= n - 1, (s - (n - 1)) / 0.5, s - fl))
    t = np.clip(t, 0.0, 1.0)
    lo = lo.astype(np.intp)
    return np.stack([lo, lo + 1], axis=-1), np.stack([1.0 - t, t], axis=-1)


def pad_faces(f: np.ndarray, dim: int, face_values) -> np.ndarray:
    """Append wall nodes on every active axis.

    ``face_values[a]`` is a pair (low, high); each entry is either ``None``
    (copy the adjacent cell value) or a scalar.
    """
    out = f
    for a in range(dim):
        ax = out.ndim - dim + a
        g = np.moveaxis(out, ax, 0)
        lo_v, hi_v = face_values[a]
        lo = g[:1].copy() if lo_v is None else np.full_like(g[:1], lo_v)
        hi = g[-1:].copy() if hi_v is None else np.full_like(g[-1:], hi_v)
        out = np.moveaxis(np.concatenate([lo, g, hi], axis=0), 0, ax)
    return out


def face_linear(fpad: np.ndarray, coords: list[np.ndarray], grid: SpatialGrid) -> np.ndarray:
    """Multilinear interpolation on a face-padded array (see :func:`pad_faces`).

    Valid for index coordinates in ``[-0.5, n - 0.5]``; monotone, so
    nonnegative data give nonnegative values.
    """
    return _gather(fpad, [_face_linear_axis(s, n) for s, n in zip(coords, grid.cells)])


def periodic_linear(f: np.ndarray, coords: list[np.ndarray], grid: SpatialGrid) -> np.ndarray:
    st = []
    for s, n in zip(coords, grid.cells):
        fl = np.floor(s)
        i0 = fl.astype(np.intp) % n
        t = s - fl
        st.append((np.stack([i0, (i0 + 1) % n], axis=-1), np.stack([1.0 - t, t], axis=-1)))
    return _gather(f, st)
