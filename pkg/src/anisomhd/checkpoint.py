"""Binary field checkpoints.

Layout (little endian): a 64-byte header

    magic   8s   b"ANISOMHD"
    version u32
    n1 n2 n3 u32 x3
    L       f64
    time    f64
    ncomp   u32
    padding to 64 bytes (zeros)

followed by ``ncomp`` real-space components, each stored as float64 in x3-major
order (x3 slowest, x1 fastest).  A FieldPair is written as 6 components
(u1, u2, u3, b1, b2, b3).
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import FieldPair, SpectralGrid, VectorField

MAGIC = b"ANISOMHD"
VERSION = 1
HEADER_SIZE = 64
_HEADER = struct.Struct("<8sI3IddI")


def write_components(path, grid: SpectralGrid, components: np.ndarray, time: float = 0.0) -> None:
    components = np.asarray(components, dtype=float)
    if components.ndim == 3:
        components = components[None]
    if components.shape[1:] != grid.shape:
        raise ValueError(f"component shape {components.shape[1:]} does not match grid {grid.shape}")
    header = _HEADER.pack(MAGIC, VERSION, grid.n1, grid.n2, grid.n3, float(grid.L), float(time),
                          components.shape[0])
    header = header.ljust(HEADER_SIZE, b"\0")
    # (c, x1, x2, x3) -> (c, x3, x2, x1) so that x1 varies fastest on disk
    body = np.ascontiguousarray(components.transpose(0, 3, 2, 1)).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_components(path) -> tuple[SpectralGrid, np.ndarray, float]:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: file too short for a checkpoint header")
    magic, version, n1, n2, n3, L, time, ncomp = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    grid = SpectralGrid(n1, n2, n3, L)
    expected = ncomp * grid.npoints * 8
    if len(raw) - HEADER_SIZE != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, found {len(raw) - HEADER_SIZE}")
    body = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE).reshape(ncomp, n3, n2, n1)
    return grid, body.transpose(0, 3, 2, 1).astype(float), time


def save_pair(path, p: FieldPair) -> None:
    r = p.to_real()
    write_components(path, r.grid, np.concatenate([r.u.data, r.b.data]), r.time)


def load_pair(path) -> FieldPair:
    grid, comps, time = read_components(path)
    if comps.shape[0] != 6:
        raise ValueError(f"{path}: a FieldPair checkpoint has 6 components, found {comps.shape[0]}")
    return FieldPair(VectorField(grid, comps[:3].copy(), "real"),
                     VectorField(grid, comps[3:].copy(), "real"), time)
