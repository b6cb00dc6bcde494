"""Binary and CSV persistence for Field values.

Binary layout: a 32-byte header (magic "MBEF", uint32 version, uint32 d,
uint32 N, float64 L, zero padding) followed by the samples as row-major
64-bit little-endian reals.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .spectral import Field, GridSpec

MAGIC = b"MBEF"
VERSION = 1
_HEADER = struct.Struct("<4sIIId8x")  # 4+4+4+4+8+8 = 32 bytes
assert _HEADER.size == 32


def write_field(f: Field, path) -> None:
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, VERSION, f.grid.dimension, f.grid.points_per_axis, f.grid.box_length
    )
    data = np.ascontiguousarray(f.samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_field(path) -> Field:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, d, n, length = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        grid = GridSpec(d, n, length)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != grid.size:
        raise ValueError(f"{path}: expected {grid.size} samples, got {data.size}")
    return Field(grid, data)


def export_csv(f: Field, path) -> None:
    """Debug export: one row per sample, index coordinates then value."""
    path = Path(path)
    d = f.grid.dimension
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"i{a}" for a in range(d)] + ["value"])
        for idx in np.ndindex(*f.grid.shape):
            writer.writerow(list(idx) + [repr(float(f.samples[idx]))])
