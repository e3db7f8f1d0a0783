"""Heatmap container file.

Little-endian layout:

    magic   4 bytes  b"HMC1"
    uint32  width
    uint32  height
    uint32  entry count
    entries: int32 ref_tid, int32 ref_frame, int32 query_frame, uint64 offset
    rasters: width*height bytes each, row-major, value = round(p * 255)

Offsets are absolute file positions.  Keys must be unique.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from ..model import BinaryMask
from ..similarity import Heatmap

MAGIC = b"HMC1"
_HEADER = struct.Struct("<4sIII")
_ENTRY = struct.Struct("<iiiQ")

Key = tuple[int, int, int]


def quantize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to uint8, rounding .5 upward."""
    v = np.asarray(values, dtype=np.float64)
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError("heatmap values outside [0, 1]")
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def write_heatmaps(
    entries: Mapping[Key, np.ndarray], width: int, height: int, path: str | Path
) -> None:
    """Write heatmap rasters keyed by (ref_tid, ref_frame, query_frame).

    Accepts float arrays in [0, 1] (quantized here) or ready uint8 arrays.
    """
    keys = sorted(entries)
    blobs = []
    for key in keys:
        arr = np.asarray(entries[key])
        if arr.shape != (height, width):
            raise ValueError(f"entry {key}: shape {arr.shape}, expected {(height, width)}")
        if arr.dtype != np.uint8:
            arr = quantize(arr)
        blobs.append(arr.tobytes(order="C"))
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, width, height, len(keys)))
        offset = _HEADER.size + _ENTRY.size * len(keys)
        for key, blob in zip(keys, blobs):
            handle.write(_ENTRY.pack(key[0], key[1], key[2], offset))
            offset += len(blob)
        for blob in blobs:
            handle.write(blob)


class FileHeatmapProvider:
    """Heatmap source reading a container file; misses return None."""

    def __init__(self, path: str | Path):
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size:
            raise ValueError(f"{path}: too short for a header")
        magic, width, height, count = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if width <= 0 or height <= 0:
            raise ValueError(f"{path}: non-positive dimensions")
        self.width = int(width)
        self.height = int(height)
        size = self.width * self.height
        self._maps: dict[Key, np.ndarray] = {}
        pos = _HEADER.size
        for _ in range(count):
            if pos + _ENTRY.size > len(data):
                raise ValueError(f"{path}: truncated index")
            tid, ref_frame, query_frame, offset = _ENTRY.unpack_from(data, pos)
            pos += _ENTRY.size
            key = (tid, ref_frame, query_frame)
            if key in self._maps:
                raise ValueError(f"{path}: duplicate key {key}")
            if offset + size > len(data):
                raise ValueError(f"{path}: raster for {key} extends past end of file")
            raster = np.frombuffer(data, dtype=np.uint8, count=size, offset=offset)
            self._maps[key] = raster.reshape((self.height, self.width))

    def keys(self) -> set[Key]:
        return set(self._maps)

    def propagate(
        self, ref_tid: int, ref_frame: int, ref_mask: BinaryMask, query_frame: int
    ) -> Heatmap | None:
        raster = self._maps.get((ref_tid, ref_frame, query_frame))
        if raster is None:
            return None
        return Heatmap(
            width=self.width, height=self.height, values=raster.astype(np.float64) / 255.0
        )
