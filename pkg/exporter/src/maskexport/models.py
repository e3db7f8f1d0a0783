"""Inference engines.

The classic engines are self-contained numpy implementations good enough
to produce structurally valid exports on real sequences: block-matching
flow, template-correlation heatmaps, and masked color histograms as
appearance vectors.  The torch engine is a mount point for checkpoint
inference and fails with instructions rather than degrading silently.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

DEFAULT_BLOCK = 8
DEFAULT_RADIUS = 7
DEFAULT_BINS = 4
_EPS = 1e-12


def to_gray(image: np.ndarray) -> np.ndarray:
    """Luma from an RGB uint8 frame, as float64."""
    rgb = image.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


# ----------------------------------------------------------------- flow


def block_flow(
    prev_image: np.ndarray,
    next_image: np.ndarray,
    block: int = DEFAULT_BLOCK,
    radius: int = DEFAULT_RADIUS,
) -> np.ndarray:
    """Per-block displacement minimizing SSD, replicated per pixel.

    Offsets are tried small-to-large with strictly-better updates, so ties
    keep the smallest displacement and the result is deterministic.  Blocks
    whose candidate window leaves the frame keep their previous best.
    """
    prev_gray = to_gray(prev_image)
    next_gray = to_gray(next_image)
    if prev_gray.shape != next_gray.shape:
        raise ValueError(
            f"frame shapes differ: {prev_gray.shape} vs {next_gray.shape}"
        )
    height, width = prev_gray.shape
    pad_y = (-height) % block
    pad_x = (-width) % block
    prev_pad = np.pad(prev_gray, ((0, pad_y), (0, pad_x)), mode="edge")
    next_pad = np.pad(next_gray, ((0, pad_y), (0, pad_x)), mode="edge")
    ph, pw = prev_pad.shape
    blocks_y, blocks_x = ph // block, pw // block

    big = np.inf
    best_ssd = np.full((blocks_y, blocks_x), big)
    best_dy = np.zeros((blocks_y, blocks_x), dtype=np.float32)
    best_dx = np.zeros((blocks_y, blocks_x), dtype=np.float32)

    offsets = [(dy, dx) for dy in range(-radius, radius + 1)
               for dx in range(-radius, radius + 1)]
    offsets.sort(key=lambda o: (abs(o[0]) + abs(o[1]), o[0], o[1]))
    for dy, dx in offsets:
        diff = np.full((ph, pw), big)
        y0, y1 = max(0, -dy), min(ph, ph - dy)
        x0, x1 = max(0, -dx), min(pw, pw - dx)
        if y0 >= y1 or x0 >= x1:
            continue
        window = prev_pad[y0:y1, x0:x1] - next_pad[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
        diff[y0:y1, x0:x1] = window * window
        ssd = diff.reshape(blocks_y, block, blocks_x, block).sum(axis=(1, 3))
        better = ssd < best_ssd
        best_ssd[better] = ssd[better]
        best_dy[better] = dy
        best_dx[better] = dx

    flow = np.zeros((ph, pw, 2), dtype=np.float32)
    flow[..., 0] = np.repeat(np.repeat(best_dx, block, axis=0), block, axis=1)
    flow[..., 1] = np.repeat(np.repeat(best_dy, block, axis=0), block, axis=1)
    return flow[:height, :width]


# ------------------------------------------------------------- heatmaps


# mean-squared-error scale at which the match score halves (~36 levels rms)
_MATCH_TOLERANCE = 0.02 * 255.0 ** 2


def template_heatmap(
    ref_image: np.ndarray, ref_mask: np.ndarray, query_image: np.ndarray
) -> np.ndarray:
    """Locate the masked reference patch in the query frame.

    Masked sum-of-squared-differences of the reference crop against every
    query position (uniform patches match fine, unlike correlation); the
    mask shape is stamped at the best position, weighted by
    1 / (1 + mse / tolerance), which is 1.0 on an exact match.  Returns
    zeros when the mask is empty.
    """
    if ref_mask.shape != ref_image.shape[:2]:
        raise ValueError(
            f"mask {ref_mask.shape} does not match image {ref_image.shape[:2]}"
        )
    heat = np.zeros(ref_mask.shape, dtype=np.float64)
    ys, xs = np.nonzero(ref_mask)
    if ys.size == 0:
        return heat
    top, bottom = ys.min(), ys.max() + 1
    left, right = xs.min(), xs.max() + 1
    stamp = ref_mask[top:bottom, left:right]
    th, tw = stamp.shape
    if th > query_image.shape[0] or tw > query_image.shape[1]:
        return heat

    weight = stamp.astype(np.float64)
    ssd = 0.0
    for channel in range(3):
        template = ref_image[top:bottom, left:right, channel].astype(np.float64)
        windows = sliding_window_view(
            query_image[..., channel].astype(np.float64), (th, tw)
        )
        masked_template = template * weight
        ssd = ssd + (
            np.tensordot(windows ** 2, weight, axes=([2, 3], [0, 1]))
            - 2.0 * np.tensordot(windows, masked_template, axes=([2, 3], [0, 1]))
            + (masked_template * template).sum()
        )
    mse = ssd / (3.0 * weight.sum())
    scores = 1.0 / (1.0 + np.maximum(mse, 0.0) / _MATCH_TOLERANCE)

    by, bx = np.unravel_index(int(np.argmax(scores)), scores.shape)
    heat[by:by + th, bx:bx + tw][stamp] = float(scores[by, bx])
    return heat


# ------------------------------------------------------------- features


def color_feature(image: np.ndarray, mask: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Masked joint RGB histogram, L2-normalized, as a float32 vector."""
    if mask.shape != image.shape[:2]:
        raise ValueError(f"mask {mask.shape} does not match image {image.shape[:2]}")
    vec = np.zeros(bins ** 3, dtype=np.float64)
    pixels = image[mask]
    if pixels.size:
        idx = (pixels.astype(np.int64) * bins) // 256
        flat = (idx[:, 0] * bins + idx[:, 1]) * bins + idx[:, 2]
        vec = np.bincount(flat, minlength=bins ** 3).astype(np.float64)
        norm = np.sqrt((vec * vec).sum())
        if norm > 0:
            vec /= norm
    return vec.astype(np.float32)


# ---------------------------------------------------------------- torch


def load_torch_engine(kind: str, checkpoint: str | None):
    """Checkpoint inference mount point; every failure says what to do."""
    try:
        import torch  # noqa: F401
    except ImportError as exc:
        raise RuntimeError(
            f"the torch {kind} engine needs the 'torch' package; "
            "install it, or use --engine classic"
        ) from exc
    if not checkpoint:
        raise RuntimeError(
            f"the torch {kind} engine needs --checkpoint WEIGHTS, "
            "or use --engine classic"
        )
    if not Path(checkpoint).exists():
        raise RuntimeError(
            f"checkpoint {checkpoint!r} does not exist; download the weights "
            "first, or use --engine classic"
        )
    raise RuntimeError(
        f"no torch {kind} architecture is bundled with this build; "
        "use --engine classic"
    )
