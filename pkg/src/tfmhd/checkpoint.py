"""Field checkpoint format.

Layout: header ``b"TFMHD1"`` + n_per_axis (u32 LE) + field count (u32 LE),
followed by the fields as raw complex64 little-endian cubes in FFT ordering.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import Grid3, SpectralField, VectorField

MAGIC = b"TFMHD1"


def _flatten(fields: Iterable) -> list[SpectralField]:
    flat: list[SpectralField] = []
    for f in fields:
        if isinstance(f, VectorField):
            flat.extend(f.components)
        else:
            flat.append(f)
    return flat


def write_checkpoint(path, fields: Sequence) -> None:
    """Write scalar/vector fields to a checkpoint file (complex64 payload)."""
    flat = _flatten(fields)
    if not flat:
        raise ValueError("checkpoint requires at least one field")
    n = flat[0].grid.n
    if any(f.grid.n != n for f in flat):
        raise ValueError("checkpoint fields live on different grids")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, len(flat)))
        for f in flat:
            fh.write(np.ascontiguousarray(f.coeffs, dtype="<c8").tobytes())


def read_checkpoint(path) -> tuple[Grid3, list[SpectralField]]:
    """Read a checkpoint; coefficients are upcast to complex128."""
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a TFMHD1 checkpoint")
    n, count = struct.unpack_from("<II", data, len(MAGIC))
    grid = Grid3(n)
    offset = len(MAGIC) + 8
    nbytes = n**3 * 8
    fields = []
    for i in range(count):
        chunk = data[offset + i * nbytes : offset + (i + 1) * nbytes]
        if len(chunk) != nbytes:
            raise ValueError(f"{path}: truncated checkpoint (field {i})")
        arr = np.frombuffer(chunk, dtype="<c8").astype(np.complex128).reshape(n, n, n)
        fields.append(SpectralField(grid, arr))
    return grid, fields


def read_state_fields(path) -> tuple[Grid3, VectorField, VectorField]:
    """Read a 6-field checkpoint back as (u, b) vector fields."""
    grid, fields = read_checkpoint(path)
    if len(fields) != 6:
        raise ValueError(f"{path}: expected 6 fields (u, b), found {len(fields)}")
    u = VectorField(fields[0], fields[1], fields[2], solenoidal=True)
    b = VectorField(fields[3], fields[4], fields[5], solenoidal=True)
    return grid, u, b
