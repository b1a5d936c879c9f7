"""Binary field (.wfld) and mask (.wmsk) files.

Header (little-endian): 4 magic bytes, uint32 format version, uint32 nx,
uint32 ny, float32 dx (m), float32 timestamp (s).  Field files carry the
cell-centered u component then v component as row-major float32 arrays
of shape (nx, ny); mask files carry one byte per cell (1 = occupied).
"""

from __future__ import annotations

import struct

import numpy as np

from ..worldgen import CellMask
from .solver import TimeAveragedField

FIELD_MAGIC = b"WFLD"
MASK_MAGIC = b"WMSK"
VERSION = 1

_HEADER = struct.Struct("<4sIIIff")


def _write_header(f, magic, nx, ny, dx, t):
    f.write(_HEADER.pack(magic, VERSION, nx, ny, float(dx), float(t)))


def _read_header(f, magic):
    raw = f.read(_HEADER.size)
    got, version, nx, ny, dx, t = _HEADER.unpack(raw)
    if got != magic:
        raise ValueError(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported format version {version}")
    return nx, ny, dx, t


def save_field(field: TimeAveragedField, path):
    nx, ny = field.u.shape
    with open(path, "wb") as f:
        _write_header(f, FIELD_MAGIC, nx, ny, field.dx, field.window)
        f.write(np.ascontiguousarray(field.u, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(field.v, dtype="<f4").tobytes())


def load_field(path):
    with open(path, "rb") as f:
        nx, ny, dx, t = _read_header(f, FIELD_MAGIC)
        count = nx * ny
        u = np.frombuffer(f.read(4 * count), dtype="<f4").reshape(nx, ny).astype(float)
        v = np.frombuffer(f.read(4 * count), dtype="<f4").reshape(nx, ny).astype(float)
    return TimeAveragedField(u=u, v=v, dx=dx, n_samples=0, window=t)


def save_mask(mask: CellMask, path, t=0.0):
    with open(path, "wb") as f:
        _write_header(f, MASK_MAGIC, mask.nx, mask.ny, mask.dx, t)
        f.write(np.ascontiguousarray(mask.occupied, dtype=np.uint8).tobytes())


def load_mask(path):
    with open(path, "rb") as f:
        nx, ny, dx, _ = _read_header(f, MASK_MAGIC)
        occ = np.frombuffer(f.read(nx * ny), dtype=np.uint8).reshape(nx, ny).astype(bool)
    return CellMask(nx=nx, ny=ny, dx=dx, occupied=occ)
