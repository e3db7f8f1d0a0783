"""Re-identification feature table file.

Little-endian layout:

    magic   4 bytes  b"RFT1"
    uint32  vector length
    uint32  row count
    rows:   int32 tracklet_id, int32 frame, then vector length float32 values

Keys (tracklet_id, frame) must be unique; vectors must be finite.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"RFT1"
_HEADER = struct.Struct("<4sII")
_ROW_KEY = struct.Struct("<ii")

Key = tuple[int, int]


class ReidTable:
    """In-memory feature lookup keyed by (tracklet id, frame)."""

    def __init__(self, dim: int, rows: Mapping[Key, np.ndarray]):
        if dim <= 0:
            raise ValueError("vector length must be positive")
        self.dim = int(dim)
        self._rows: dict[Key, np.ndarray] = {}
        for key, vec in rows.items():
            v = np.asarray(vec, dtype=np.float32)
            if v.shape != (self.dim,):
                raise ValueError(f"row {key}: vector length {v.size}, expected {self.dim}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"row {key}: non-finite feature values")
            self._rows[key] = v

    def get(self, tid: int, frame: int) -> np.ndarray | None:
        return self._rows.get((tid, frame))

    def keys(self) -> set[Key]:
        return set(self._rows)

    def __len__(self) -> int:
        return len(self._rows)


def write_reid(table: ReidTable, path: str | Path) -> None:
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, table.dim, len(table)))
        for (tid, frame) in sorted(table.keys()):
            handle.write(_ROW_KEY.pack(tid, frame))
            handle.write(table.get(tid, frame).astype("<f4").tobytes())


def read_reid(path: str | Path) -> ReidTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: too short for a header")
    magic, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if dim <= 0:
        raise ValueError(f"{path}: non-positive vector length")
    row_size = _ROW_KEY.size + 4 * dim
    expected = _HEADER.size + row_size * count
    if len(data) != expected:
        raise ValueError(
            f"{path}: file is {len(data)} bytes, expected {expected} "
            f"for {count} rows of length-{dim} vectors"
        )
    rows: dict[Key, np.ndarray] = {}
    pos = _HEADER.size
    for _ in range(count):
        tid, frame = _ROW_KEY.unpack_from(data, pos)
        pos += _ROW_KEY.size
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).copy()
        pos += 4 * dim
        key = (tid, frame)
        if key in rows:
            raise ValueError(f"{path}: duplicate key {key}")
        rows[key] = vec
    return ReidTable(dim=dim, rows=rows)
