"""Binary dumps of spinor and phase-space fields.

Layout, all little-endian: the magic ``b"WPTF"``, four ``uint32`` values
``N, n, n_xi, m``, one ``float64`` ``L``, then the complex128 samples in
row-major order as (real, imag) pairs.  Spinor fields are written with
``n_xi = 0``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Grid, SpinorField
from .wavepacket import PhaseSpaceField

__all__ = ["dump_field", "load_field"]

MAGIC = b"WPTF"
_HEADER = struct.Struct("<4sIIIId")


def dump_field(field, path) -> None:
    """Write a :class:`SpinorField` (spatial samples) or :class:`PhaseSpaceField`."""
    if isinstance(field, PhaseSpaceField):
        n_xi = field.grid.n
    elif isinstance(field, SpinorField):
        if field.space != "x":
            raise ValueError("only spatially sampled spinor fields can be dumped")
        n_xi = 0
    else:
        raise TypeError(f"cannot dump {type(field).__name__}")
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.N, g.n, n_xi, field.m, g.L))
        fh.write(np.ascontiguousarray(field.data, dtype="<c16").tobytes())


def load_field(path):
    """Read a field written by :func:`dump_field`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a field header")
    magic, N, n, n_xi, m, L = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if n_xi not in (0, n):
        raise ValueError(f"frequency axis length {n_xi} must be 0 or {n}")
    grid = Grid(N, n, L)
    shape = (m,) + grid.shape * (2 if n_xi else 1)
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"payload holds {data.size} values, header implies {int(np.prod(shape))}")
    data = data.reshape(shape).astype(complex)
    return PhaseSpaceField(grid, data) if n_xi else SpinorField(grid, data)
