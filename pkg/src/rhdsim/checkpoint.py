"""Checkpoint container: a short text header followed by raw float64 arrays.

Layout (see docs/formats.md)::

    RHDSIM-CHECKPOINT
    version 1
    dim 2
    cells 32 32
    lengths 1.0 1.0
    n_groups 1
    n_ordinates 8
    time 0.25
    arrays rho u1 u2 u3 theta I
    byte_order little
    END
    <binary payload>

Every array is row-major little-endian float64; ``I`` is stored as
consecutive (g, m) blocks. Floats in the header use ``repr`` so they
round-trip exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import FluidState

MAGIC = "RHDSIM-CHECKPOINT"
VERSION = 1
ARRAYS = ("rho", "u1", "u2", "u3", "theta", "I")
_DTYPE = np.dtype("<f8")


class CheckpointError(IOError):
    """Malformed, truncated or incompatible checkpoint file."""


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    cells: tuple[int, ...]
    lengths: tuple[float, ...]
    n_groups: int
    n_ordinates: int
    time: float
    payload_offset: int

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def n_values(self) -> int:
        n = int(np.prod(self.cells))
        return 5 * n + self.n_groups * self.n_ordinates * n


def write_checkpoint(state: FluidState, I: np.ndarray, path, lengths=None) -> None:
    """Write ``state`` and intensity ``I`` (shape (G, M, *cells)).

    The file is written to a temporary name and renamed, so a crash never
    leaves a half-written checkpoint under the final name.
    """
    path = Path(path)
    cells = state.rho.shape
    I = np.asarray(I, dtype=float)
    if I.shape[2:] != cells:
        raise ValueError(f"intensity shape {I.shape} does not match grid {cells}")
    if lengths is None:
        lengths = (1.0,) * len(cells)
    header = "\n".join([
        MAGIC,
        f"version {VERSION}",
        f"dim {len(cells)}",
        "cells " + " ".join(str(n) for n in cells),
        "lengths " + " ".join(repr(float(x)) for x in lengths),
        f"n_groups {I.shape[0]}",
        f"n_ordinates {I.shape[1]}",
        f"time {float(state.time)!r}",
        "arrays " + " ".join(ARRAYS),
        "byte_order little",
        "END",
    ]) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        for arr in (state.rho, state.u[0], state.u[1], state.u[2], state.theta, I):
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes(order="C"))
    os.replace(tmp, path)


def read_header(path) -> CheckpointHeader:
    """Parse the text header only (arrays are not loaded)."""
    fields = {}
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii", "replace").strip()
        if first != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        while True:
            line = fh.readline()
            if not line:
                raise CheckpointError(f"{path}: truncated header")
            text = line.decode("ascii", "replace").strip()
            if text == "END":
                break
            key, _, rest = text.partition(" ")
            fields[key] = rest.split()
        offset = fh.tell()
    try:
        version = int(fields["version"][0])
        if version != VERSION:
            raise CheckpointError(f"{path}: format version {version}, this reader handles {VERSION}")
        cells = tuple(int(x) for x in fields["cells"])
        dim = int(fields["dim"][0])
        lengths = tuple(float(x) for x in fields["lengths"])
        if dim != len(cells) or dim != len(lengths):
            raise CheckpointError(f"{path}: dim {dim} disagrees with cells {cells} / lengths {lengths}")
        if tuple(fields["arrays"]) != ARRAYS:
            raise CheckpointError(f"{path}: unexpected array list {fields['arrays']}")
        if fields["byte_order"] != ["little"]:
            raise CheckpointError(f"{path}: unsupported byte order {fields['byte_order']}")
        return CheckpointHeader(version, cells, lengths, int(fields["n_groups"][0]), int(fields["n_ordinates"][0]),
                                float(fields["time"][0]), offset)
    except (KeyError, IndexError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed header ({exc})") from None


def read_checkpoint(path, expect_dim: int | None = None) -> tuple[FluidState, np.ndarray]:
    h = read_header(path)
    if expect_dim is not None and h.dim != expect_dim:
        raise CheckpointError(f"{path}: checkpoint is {h.dim}D, expected {expect_dim}D")
    with open(path, "rb") as fh:
        fh.seek(h.payload_offset)
        raw = fh.read()
    need = h.n_values * _DTYPE.itemsize
    if len(raw) != need:
        raise CheckpointError(f"{path}: payload has {len(raw)} bytes, expected {need} (truncated or corrupt)")
    data = np.frombuffer(raw, dtype=_DTYPE).astype(float)
    n = int(np.prod(h.cells))
    parts = [data[k * n:(k + 1) * n].reshape(h.cells) for k in range(5)]
    I = data[5 * n:].reshape((h.n_groups, h.n_ordinates) + h.cells)
    state = FluidState(parts[0], np.stack(parts[1:4]), parts[4], h.time)
    return state, I.copy()
