"""Binary velocity checkpoints.

Layout, all little-endian, no padding::

    offset  size  field
    0       5     magic b"MFLD1"
    5       4     n            uint32
    9       8     domain_length float64
    17      8     nu           float64
    25      8     t            float64
    33      8     V            float64
    41      1     dealias flag uint8 (0 or 1)
    42      ...   u_1, u_2, u_3, each n^3 float64 in C order over (x1, x2, x3)
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "MAGIC",
    "Checkpoint",
    "CheckpointError",
    "CheckpointVersionError",
    "CheckpointSizeError",
    "save_checkpoint",
    "load_checkpoint",
]

MAGIC = b"MFLD1"
HEADER = struct.Struct("<5sIddddB")


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointSizeError(CheckpointError):
    pass


@dataclass(frozen=True, eq=False)
class Checkpoint:
    n: int
    domain_length: float
    nu: float
    t: float
    V: float
    dealias: bool
    velocity: np.ndarray

    def __post_init__(self):
        if self.velocity.shape != (3, self.n, self.n, self.n):
            raise CheckpointSizeError(
                f"velocity shape {self.velocity.shape} does not match n={self.n}"
            )


def save_checkpoint(path: str | os.PathLike, ck: Checkpoint) -> Path:
    path = Path(path)
    header = HEADER.pack(MAGIC, ck.n, ck.domain_length, ck.nu, ck.t, ck.V, int(bool(ck.dealias)))
    body = np.ascontiguousarray(ck.velocity, dtype="<f8").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(body)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC):
        raise CheckpointSizeError(f"{path}: file too short for a header ({len(data)} bytes)")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointVersionError(f"{path}: bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    if len(data) < HEADER.size:
        raise CheckpointSizeError(f"{path}: truncated header")
    _, n, length, nu, t, V, flag = HEADER.unpack_from(data)
    if n < 4 or n & (n - 1) or flag not in (0, 1) or not length > 0 or not V > 0:
        raise CheckpointError(f"{path}: corrupt header (n={n}, L={length}, V={V}, flag={flag})")
    expected = HEADER.size + 3 * n**3 * 8
    if len(data) != expected:
        raise CheckpointSizeError(f"{path}: {len(data)} bytes, expected {expected} for n={n}")
    velocity = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(3, n, n, n)
    return Checkpoint(n, length, nu, t, V, bool(flag), velocity.astype(float))
