"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from masklink.model import BinaryMask, Detection, SequenceMeta, Tracklet


def mask_from_rows(rows: list[str]) -> BinaryMask:
    """Build a mask from a picture: '#' foreground, anything else background."""
    arr = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
    return BinaryMask.from_array(arr)


def rect_mask(height: int, width: int, x0: int, y0: int, w: int, h: int) -> BinaryMask:
    arr = np.zeros((height, width), dtype=bool)
    arr[y0 : y0 + h, x0 : x0 + w] = True
    return BinaryMask.from_array(arr)


def random_mask(rng: np.random.Generator, height: int, width: int, p: float = 0.4) -> BinaryMask:
    return BinaryMask.from_array(rng.random((height, width)) < p)


def det(frame: int, mask: BinaryMask, score: float = 0.95, class_id: int = 1) -> Detection:
    return Detection(frame=frame, class_id=class_id, score=score, mask=mask)


def tracklet(tid: int, dets: list[Detection], class_id: int = 1) -> Tracklet:
    return Tracklet(id=tid, class_id=class_id, detections=tuple(dets))


def simple_meta(width: int = 20, height: int = 10, frames: int = 10, fps: float = 10.0) -> SequenceMeta:
    return SequenceMeta(
        sequence_id="test", width=width, height=height, fps=fps, frame_count=frames
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
