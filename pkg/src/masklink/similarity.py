"""Appearance similarity between tracklet pairs.

The main backend compares propagation heatmaps against detection masks; the
alternatives compare masked color histograms or re-identification feature
vectors between reference anchors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from .lta import SimilarityFn, select_references
from .maskops import bhattacharyya, masked_histogram
from .model import Backend, BinaryMask, PipelineConfig, Tracklet

log = logging.getLogger(__name__)

HISTOGRAM_BINS = 8


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Per-pixel foreground likelihood in [0, 1]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.height, self.width):
            raise ValueError(
                f"heatmap shape {v.shape} does not match {self.height}x{self.width}"
            )
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("heatmap values must lie in [0, 1]")
        object.__setattr__(self, "values", v)


class HeatmapProvider(Protocol):
    """Source of propagation heatmaps.

    Given a reference anchor (the tracklet it belongs to, its frame, and its
    mask) and a query frame, produces the heatmap of the anchored object in
    the query frame, or None when the source has no answer for that key.
    """

    def propagate(
        self, ref_tid: int, ref_frame: int, ref_mask: BinaryMask, query_frame: int
    ) -> Heatmap | None: ...


@dataclass(frozen=True)
class PropagationJob:
    """One heatmap request: push `ref` onto `query_frame`, compare there."""

    ref_tid: int
    ref_frame: int
    ref_mask: BinaryMask
    query_tid: int
    query_frame: int
    query_mask: BinaryMask


def cosine_heatmap_mask(h: Heatmap, m: BinaryMask) -> float:
    """Cosine similarity between a heatmap and a mask over the full grid.

    Either operand with zero norm yields 0.
    """
    if (h.width, h.height) != (m.width, m.height):
        raise ValueError(
            f"heatmap {h.width}x{h.height} does not match mask {m.width}x{m.height}"
        )
    hv = h.values.reshape(-1)
    mv = m.to_array().reshape(-1).astype(np.float64)
    nh = float(np.linalg.norm(hv))
    nm = float(np.linalg.norm(mv))
    if nh == 0.0 or nm == 0.0:
        return 0.0
    return float(hv @ mv) / (nh * nm)


def cosine_vectors(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


def pair_jobs(a: Tracklet, b: Tracklet, cfg: PipelineConfig) -> list[PropagationJob]:
    """Heatmap requests for an admissible pair (a earlier, b later).

    Anchors of both tracklets are listed closest-gap-first and paired up
    positionally, one propagation per anchor in each direction.  With the
    default two anchors per side this yields four jobs; variants with
    unequal anchor counts use the shorter side's count.
    """
    refs_a = select_references(a, cfg.ref_variant, cfg.n_ref, cfg.n_ref_fallback, "earlier")
    refs_b = select_references(b, cfg.ref_variant, cfg.n_ref, cfg.n_ref_fallback, "later")
    jobs = []
    for (fa, ma), (fb, mb) in zip(refs_a, refs_b):
        jobs.append(
            PropagationJob(
                ref_tid=a.id, ref_frame=fa, ref_mask=ma,
                query_tid=b.id, query_frame=fb, query_mask=mb,
            )
        )
        jobs.append(
            PropagationJob(
                ref_tid=b.id, ref_frame=fb, ref_mask=mb,
                query_tid=a.id, query_frame=fa, query_mask=ma,
            )
        )
    return jobs


def sim_stm(
    a: Tracklet, b: Tracklet, provider: HeatmapProvider, cfg: PipelineConfig
) -> float | None:
    """Mean cosine between each propagated heatmap and the mask it lands on.

    Returns None when the provider misses any requested key.
    """
    scores = []
    for job in pair_jobs(a, b, cfg):
        heat = provider.propagate(job.ref_tid, job.ref_frame, job.ref_mask, job.query_frame)
        if heat is None:
            log.warning(
                "heatmap missing for reference (%d, %d) query frame %d",
                job.ref_tid, job.ref_frame, job.query_frame,
            )
            return None
        scores.append(cosine_heatmap_mask(heat, job.query_mask))
    return float(np.mean(scores))


def _anchor_dets(t: Tracklet, cfg: PipelineConfig, role) -> list:
    anchors = select_references(t, cfg.ref_variant, cfg.n_ref, cfg.n_ref_fallback, role)
    by_frame = {d.frame: d for d in t.detections}
    return [by_frame[f] for f, _ in anchors]


def sim_rgb(
    a: Tracklet,
    b: Tracklet,
    images: Mapping[int, np.ndarray] | Sequence[np.ndarray],
    cfg: PipelineConfig,
    *,
    all_frames: bool,
    cache: dict | None = None,
) -> float | None:
    """Mean Bhattacharyya coefficient over masked color histograms.

    Anchor detections of both tracklets are compared all-against-all; with
    all_frames=True every detection of both tracklets takes part instead.
    """
    da = list(a.detections) if all_frames else _anchor_dets(a, cfg, "earlier")
    db = list(b.detections) if all_frames else _anchor_dets(b, cfg, "later")

    def hist(tid: int, det):
        key = (tid, det.frame)
        if cache is not None and key in cache:
            return cache[key]
        try:
            image = images[det.frame]
        except (KeyError, IndexError):
            log.warning("image missing for frame %d; pair (%d, %d) skipped", det.frame, a.id, b.id)
            return None
        h = masked_histogram(image, det.mask, HISTOGRAM_BINS)
        if cache is not None:
            cache[key] = h
        return h

    ha = [hist(a.id, d) for d in da]
    hb = [hist(b.id, d) for d in db]
    if any(h is None for h in ha) or any(h is None for h in hb):
        return None
    coeffs = [bhattacharyya(x, y) for x in ha for y in hb]
    return float(np.mean(coeffs))


class ReidSource(Protocol):
    def get(self, tid: int, frame: int) -> np.ndarray | None: ...


def sim_reid(
    a: Tracklet,
    b: Tracklet,
    features: ReidSource,
    cfg: PipelineConfig,
    *,
    all_frames: bool,
) -> float | None:
    """Mean cosine similarity between re-identification vectors.

    Vectors are looked up by (tracklet id, frame); a missing vector skips
    the pair.
    """
    da = list(a.detections) if all_frames else _anchor_dets(a, cfg, "earlier")
    db = list(b.detections) if all_frames else _anchor_dets(b, cfg, "later")
    va = [features.get(a.id, d.frame) for d in da]
    vb = [features.get(b.id, d.frame) for d in db]
    for tid, dets, vecs in ((a.id, da, va), (b.id, db, vb)):
        for det, vec in zip(dets, vecs):
            if vec is None:
                log.warning(
                    "feature missing for tracklet %d frame %d; pair (%d, %d) skipped",
                    tid, det.frame, a.id, b.id,
                )
                return None
    sims = [cosine_vectors(x, y) for x in va for y in vb]
    return float(np.mean(sims))


def make_backend(
    cfg: PipelineConfig,
    *,
    provider: HeatmapProvider | None = None,
    images: Mapping[int, np.ndarray] | Sequence[np.ndarray] | None = None,
    features: ReidSource | None = None,
) -> SimilarityFn:
    """Bind the configured backend to its data source.

    Raises ValueError when the source the backend needs was not supplied.
    """
    kind = cfg.backend
    if kind is Backend.STM_HEATMAP:
        if provider is None:
            raise ValueError("backend stm requires a heatmap source")
        return lambda a, b: sim_stm(a, b, provider, cfg)
    if kind in (Backend.RGB_2X2, Backend.RGB_NXP):
        if images is None:
            raise ValueError(f"backend {kind.value} requires sequence images")
        cache: dict = {}
        all_frames = kind is Backend.RGB_NXP
        return lambda a, b: sim_rgb(a, b, images, cfg, all_frames=all_frames, cache=cache)
    if kind in (Backend.REID_2X2, Backend.REID_NXP):
        if features is None:
            raise ValueError(f"backend {kind.value} requires a feature table")
        all_frames = kind is Backend.REID_NXP
        return lambda a, b: sim_reid(a, b, features, cfg, all_frames=all_frames)
    raise ValueError(f"backend {kind.value} does not define a pair similarity")
