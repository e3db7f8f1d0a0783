"""Dense flow files.

Little-endian layout: float32 magic 202021.25, int32 width, int32 height,
then height*width interleaved (u, v) float32 pairs in row-major order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..maskops import FlowField

MAGIC = 202021.25


def read_flow(path: str | Path) -> FlowField:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise ValueError(f"{path}: too short for a flow header")
    magic = np.frombuffer(data, dtype="<f4", count=1, offset=0)[0]
    if magic != np.float32(MAGIC):
        raise ValueError(f"{path}: bad magic {magic!r}")
    width, height = (int(x) for x in np.frombuffer(data, dtype="<i4", count=2, offset=4))
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: non-positive dimensions {width}x{height}")
    expected = 12 + width * height * 2 * 4
    if len(data) != expected:
        raise ValueError(
            f"{path}: payload is {len(data)} bytes, expected {expected} for {width}x{height}"
        )
    vectors = (
        np.frombuffer(data, dtype="<f4", offset=12)
        .reshape((height, width, 2))
        .copy()
    )
    return FlowField(width=width, height=height, vectors=vectors)


def write_flow(flow: FlowField, path: str | Path) -> None:
    with open(path, "wb") as handle:
        handle.write(np.float32(MAGIC).tobytes())
        handle.write(np.array([flow.width, flow.height], dtype="<i4").tobytes())
        handle.write(flow.vectors.astype("<f4").tobytes())
