"""Core domain types: masks, detections, tracklets and the pipeline configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class RefVariant(Enum):
    """Which tracklet frames anchor the long-term similarity computation."""

    FRAME1 = "frame1"
    FRAMES12 = "frames12"
    FRAMES15_2 = "frames15_2"
    FRAMES125 = "frames125"


class Backend(Enum):
    """Similarity backend used by the long-term association stage."""

    STM_HEATMAP = "stm"
    RGB_2X2 = "rgb2x2"
    RGB_NXP = "rgbnxp"
    REID_2X2 = "reid2x2"
    REID_NXP = "reidnxp"
    ORACLE = "oracle"


@dataclass(frozen=True)
class SequenceMeta:
    """Static facts about one video sequence."""

    sequence_id: str
    width: int
    height: int
    fps: float
    frame_count: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"sequence {self.sequence_id}: non-positive dimensions")
        if self.fps <= 0:
            raise ValueError(f"sequence {self.sequence_id}: fps must be positive")
        if self.frame_count < 0:
            raise ValueError(f"sequence {self.sequence_id}: negative frame count")


@dataclass(frozen=True)
class BinaryMask:
    """Run-length encoded binary mask.

    Runs alternate background/foreground in column-major pixel order and
    always begin with a (possibly zero-length) background run.  The encoding
    is canonical: apart from the leading run, zero-length runs are rejected,
    so equal masks compare equal on their fields.
    """

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mask dimensions must be positive")
        if len(self.runs) == 0:
            raise ValueError("runs must not be empty")
        if any(r < 0 for r in self.runs):
            raise ValueError("negative run length")
        if any(r == 0 for r in self.runs[1:]):
            raise ValueError("zero-length run after the first")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise ValueError(
                f"runs cover {total} pixels, expected {self.width * self.height}"
            )

    @classmethod
    def from_array(cls, array: np.ndarray) -> BinaryMask:
        """Encode a (height, width) boolean/0-1 array."""
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError("mask array must be 2-D")
        h, w = arr.shape
        flat = (arr != 0).flatten(order="F")
        if flat.size == 0:
            raise ValueError("mask array must not be empty")
        changes = np.flatnonzero(np.diff(flat))
        bounds = np.concatenate(([0], changes + 1, [flat.size]))
        runs = np.diff(bounds)
        if flat[0]:
            # canonical form starts with a background run
            runs = np.concatenate(([0], runs))
        return cls(width=w, height=h, runs=tuple(int(r) for r in runs))

    @cached_property
    def _dense(self) -> np.ndarray:
        flat = np.zeros(self.width * self.height, dtype=bool)
        pos = 0
        value = False
        for run in self.runs:
            if value:
                flat[pos : pos + run] = True
            pos += run
            value = not value
        return flat.reshape((self.height, self.width), order="F")

    def to_array(self) -> np.ndarray:
        """Decode to a (height, width) boolean array."""
        return self._dense

    @property
    def area(self) -> int:
        return int(sum(self.runs[1::2]))


@dataclass(frozen=True)
class Detection:
    """One segmented object candidate in one frame."""

    frame: int
    class_id: int
    score: float
    mask: BinaryMask

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError("frame index must be non-negative")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Tracklet:
    """A temporally ordered chain of detections sharing one identity.

    Directly after short-term association the frames are contiguous; merged
    tracks keep the strictly-increasing frame invariant but may have gaps.
    """

    id: int
    class_id: int
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if len(self.detections) == 0:
            raise ValueError(f"tracklet {self.id}: no detections")
        frames = [d.frame for d in self.detections]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"tracklet {self.id}: frames not strictly increasing")

    @property
    def first_frame(self) -> int:
        return self.detections[0].frame

    @property
    def last_frame(self) -> int:
        return self.detections[-1].frame

    @property
    def frame_set(self) -> frozenset[int]:
        return frozenset(d.frame for d in self.detections)


# A merged track is structurally a tracklet with possibly non-contiguous frames.
Track = Tracklet


@dataclass(frozen=True)
class PipelineConfig:
    """All tunable thresholds, with the defaults the pipeline ships with."""

    theta_d: float = 0.50      # detection confidence floor (inclusive)
    theta_a: int = 128         # detection pixel-area floor (inclusive)
    theta_s: float = 0.15      # short-term match acceptance, strictly above
    tau_t: float = 1.5         # max temporal gap between tracklets, seconds
    tau_s: float = 0.2         # max normalized centroid displacement
    tau_o: int = 1             # max number of shared frames
    n_ref: int = 5             # second reference anchor offset within a tracklet
    n_ref_fallback: int = 2    # anchor offset for tracklets shorter than n_ref
    theta_l: float = 0.30      # long-term merge acceptance, strictly above
    theta_f: float = 0.90      # final track confidence floor (inclusive)
    ref_variant: RefVariant = RefVariant.FRAMES15_2
    backend: Backend = Backend.STM_HEATMAP

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_d <= 1.0:
            raise ValueError("theta_d outside [0, 1]")
        if self.theta_a < 0:
            raise ValueError("theta_a must be non-negative")
        if self.tau_t < 0 or self.tau_s < 0 or self.tau_o < 0:
            raise ValueError("admissibility bounds must be non-negative")
        if self.n_ref < 2 or self.n_ref_fallback < 2:
            raise ValueError("reference offsets must be at least 2")
        if not 0.0 <= self.theta_f <= 1.0:
            raise ValueError("theta_f outside [0, 1]")

    def replace(self, **changes) -> PipelineConfig:
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(changes)
        return PipelineConfig(**current)


def filter_detections(
    detections: Sequence[Detection],
    cfg: PipelineConfig,
    meta: SequenceMeta | None = None,
) -> list[Detection]:
    """Drop low-confidence and small detections, keeping input order.

    Boundary values survive: score == theta_d and area == theta_a are kept.
    Masks must agree with the sequence dimensions (or, without meta, with the
    first detection's dimensions).
    """
    if meta is not None:
        want = (meta.width, meta.height)
    elif detections:
        want = (detections[0].mask.width, detections[0].mask.height)
    else:
        return []
    for det in detections:
        got = (det.mask.width, det.mask.height)
        if got != want:
            raise ValueError(
                f"frame {det.frame}: mask is {got[0]}x{got[1]}, expected {want[0]}x{want[1]}"
            )
    return [
        d for d in detections if d.score >= cfg.theta_d and d.mask.area >= cfg.theta_a
    ]


def tracklet_class(detections: Tracklet | Iterable[Detection]) -> int:
    """Class vote: the class with the highest total confidence wins.

    Ties go to the smallest class id.
    """
    if isinstance(detections, Tracklet):
        detections = detections.detections
    sums: dict[int, float] = {}
    for det in detections:
        sums[det.class_id] = sums.get(det.class_id, 0.0) + det.score
    if not sums:
        raise ValueError("class vote over zero detections")
    best = max(sorted(sums), key=lambda c: sums[c])
    return best
