"""Flat binary tensor format used by checkpoints.

Layout (all little-endian)::

    magic   4 bytes  b"DKTN"
    rank    uint64
    extents rank × uint64
    values  product(extents) × float64, row-major
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from ..errors import FormatError

TENSOR_MAGIC = b"DKTN"
_U64 = struct.Struct("<Q")


def read_exact(fh: BinaryIO, size: int, what: str) -> bytes:
    """Read exactly *size* bytes or raise :class:`FormatError` naming *what*."""
    chunk = fh.read(size)
    if len(chunk) != size:
        raise FormatError(f"truncated file while reading {what}")
    return chunk


def write_tensor(fh: BinaryIO, array: np.ndarray) -> None:
    array = np.ascontiguousarray(array, dtype="<f8")
    fh.write(TENSOR_MAGIC)
    fh.write(_U64.pack(array.ndim))
    for extent in array.shape:
        fh.write(_U64.pack(extent))
    fh.write(array.tobytes(order="C"))


def read_tensor(fh: BinaryIO) -> np.ndarray:
    magic = read_exact(fh, len(TENSOR_MAGIC), "tensor magic")
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}")
    (rank,) = _U64.unpack(read_exact(fh, _U64.size, "tensor rank"))
    if rank > 32:
        raise FormatError(f"implausible tensor rank {rank}")
    shape = tuple(_U64.unpack(read_exact(fh, _U64.size, "tensor extent"))[0] for _ in range(rank))
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    raw = read_exact(fh, count * 8, "tensor values")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
