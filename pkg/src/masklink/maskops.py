"""Pixel-level operations on binary masks: overlap, centroids, flow warping,
masked color statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BinaryMask


@dataclass(frozen=True, eq=False)
class FlowField:
    """Dense optical flow for one frame pair.

    vectors has shape (height, width, 2) holding (u, v) = (dx, dy) per pixel.
    """

    width: int
    height: int
    vectors: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=np.float32)
        if v.shape != (self.height, self.width, 2):
            raise ValueError(
                f"flow shape {v.shape} does not match {self.height}x{self.width}x2"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("flow contains non-finite values")
        object.__setattr__(self, "vectors", v)


@dataclass(frozen=True, eq=False)
class ColorHistogram:
    """Joint RGB histogram, L1-normalized (or all-zero for an empty mask)."""

    bins: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bins, dtype=np.float64)
        if b.ndim != 3 or len(set(b.shape)) != 1:
            raise ValueError("histogram must be a cubic 3-D array")
        if np.any(b < 0):
            raise ValueError("histogram bins must be non-negative")
        object.__setattr__(self, "bins", b)

    @property
    def bins_per_channel(self) -> int:
        return self.bins.shape[0]


def _check_same_grid(a: BinaryMask, b: BinaryMask) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"mask grids differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two masks on the same grid.

    Two empty masks have IoU 0 by convention.
    """
    _check_same_grid(a, b)
    da, db = a.to_array(), b.to_array()
    inter = int(np.count_nonzero(da & db))
    union = int(np.count_nonzero(da | db))
    if union == 0:
        return 0.0
    return inter / union


def mask_area(m: BinaryMask) -> int:
    return m.area


def mask_centroid(m: BinaryMask) -> tuple[float, float]:
    """Mean foreground pixel position as (x, y).

    Raises ValueError for an empty mask.
    """
    ys, xs = np.nonzero(m.to_array())
    if xs.size == 0:
        raise ValueError("centroid of an empty mask")
    # integer sums, then one division: keeps the value bit-independent of
    # the summation strategy
    return (int(xs.sum()) / xs.size, int(ys.sum()) / ys.size)


def warp_mask(m: BinaryMask, flow: FlowField) -> BinaryMask:
    """Push each foreground pixel along the flow, rounding to the nearest cell.

    Pixels leaving the grid are dropped; colliding destinations merge.
    """
    if (m.width, m.height) != (flow.width, flow.height):
        raise ValueError(
            f"mask {m.width}x{m.height} does not match flow {flow.width}x{flow.height}"
        )
    out = np.zeros((m.height, m.width), dtype=bool)
    ys, xs = np.nonzero(m.to_array())
    if xs.size:
        d = flow.vectors[ys, xs]
        tx = xs + np.rint(d[:, 0]).astype(np.int64)
        ty = ys + np.rint(d[:, 1]).astype(np.int64)
        keep = (tx >= 0) & (tx < m.width) & (ty >= 0) & (ty < m.height)
        out[ty[keep], tx[keep]] = True
    return BinaryMask.from_array(out)


def masked_histogram(
    image: np.ndarray, m: BinaryMask, bins_per_channel: int = 8
) -> ColorHistogram:
    """Joint RGB histogram over the mask's foreground pixels.

    Args:
        image: (height, width, 3) uint8 raster.
        m: foreground selector on the same grid.
        bins_per_channel: uniform bins over [0, 256) per channel.

    Returns:
        L1-normalized histogram; all-zero when the mask is empty.
    """
    img = np.asarray(image)
    if img.shape != (m.height, m.width, 3):
        raise ValueError(
            f"image shape {img.shape} does not match mask {m.height}x{m.width}x3"
        )
    if img.dtype != np.uint8:
        raise ValueError("image must be uint8")
    nb = bins_per_channel
    counts = np.zeros((nb, nb, nb), dtype=np.float64)
    fg = m.to_array()
    if fg.any():
        px = img[fg].astype(np.int64)
        idx = (px * nb) // 256
        flat = (idx[:, 0] * nb + idx[:, 1]) * nb + idx[:, 2]
        counts = np.bincount(flat, minlength=nb**3).astype(np.float64).reshape(nb, nb, nb)
        counts /= counts.sum()
    return ColorHistogram(bins=counts)


def bhattacharyya(h1: ColorHistogram, h2: ColorHistogram) -> float:
    """Bhattacharyya coefficient of two histograms with identical layout."""
    if h1.bins.shape != h2.bins.shape:
        raise ValueError("histogram layouts differ")
    coeff = float(np.sqrt(h1.bins * h2.bins).sum())
    return min(max(coeff, 0.0), 1.0)
