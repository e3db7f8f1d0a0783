"""End-to-end orchestration: detections in, merged tracks out."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lta import SimilarityFn, final_filter, greedy_merge
from .maskops import FlowField
from .model import (
    Backend,
    Detection,
    PipelineConfig,
    SequenceMeta,
    Tracklet,
    filter_detections,
)
from .oracles import oracle_lta
from .sta import build_tracklets
from .io import flo, kv, mots, ppm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunStats:
    detections_in: int
    detections_kept: int
    tracklets: int
    merges: int
    tracks_final: int

    def kv_pairs(self) -> dict[str, int]:
        return {
            "detections_in": self.detections_in,
            "detections_kept": self.detections_kept,
            "tracklets": self.tracklets,
            "merges": self.merges,
            "tracks_final": self.tracks_final,
        }


@dataclass(frozen=True)
class RunResult:
    tracklets: list[Tracklet]  # short-term output, before any merging
    tracks: list[Tracklet]     # final output
    stats: RunStats


def run_pipeline(
    frames: list[list[Detection]],
    flows: list[FlowField | None],
    cfg: PipelineConfig,
    meta: SequenceMeta,
    *,
    similarity: SimilarityFn | None = None,
    gt_tracks: list[Tracklet] | None = None,
    disable_lta: bool = False,
) -> RunResult:
    """Run filtering, short-term association and long-term merging.

    `similarity` binds the configured appearance backend (see
    similarity.make_backend).  With backend=oracle the merge stage is
    replaced by the ground-truth re-linker, which needs `gt_tracks` and
    produces final ids itself, so the score filter is not applied there.
    With disable_lta=True the short-term tracklets go straight to the score
    filter.
    """
    detections_in = sum(len(f) for f in frames)
    filtered = [filter_detections(f, cfg, meta) for f in frames]
    detections_kept = sum(len(f) for f in filtered)
    log.info("kept %d of %d detections", detections_kept, detections_in)

    tracklets = build_tracklets(filtered, flows, cfg)
    log.info("built %d tracklets", len(tracklets))

    merges = 0
    if disable_lta:
        tracks = final_filter(tracklets, cfg)
    elif cfg.backend is Backend.ORACLE:
        if gt_tracks is None:
            raise ValueError("backend oracle requires ground-truth tracks")
        tracks = oracle_lta(tracklets, gt_tracks)
    else:
        if similarity is None:
            raise ValueError(f"backend {cfg.backend.value} requires a similarity callback")
        merged = greedy_merge(tracklets, similarity, cfg, meta)
        merges = len(tracklets) - len(merged)
        log.info("merged %d tracklets into %d tracks", len(tracklets), len(merged))
        tracks = final_filter(merged, cfg)

    stats = RunStats(
        detections_in=detections_in,
        detections_kept=detections_kept,
        tracklets=len(tracklets),
        merges=merges,
        tracks_final=len(tracks),
    )
    return RunResult(tracklets=tracklets, tracks=tracks, stats=stats)


@dataclass
class LoadedSequence:
    """A sequence directory pulled into memory."""

    path: Path
    meta: SequenceMeta
    frames: list[list[Detection]]
    flows: list[FlowField | None]
    gt_tracks: list[Tracklet] | None
    images: list[np.ndarray] | None


def _check_grid(masks, meta: SequenceMeta, label: str) -> None:
    for mask in masks:
        if (mask.width, mask.height) != (meta.width, meta.height):
            raise ValueError(
                f"{label}: mask is {mask.width}x{mask.height}, "
                f"sequence is {meta.width}x{meta.height}"
            )


def load_sequence_dir(path: str | Path, *, need_images: bool = False) -> LoadedSequence:
    """Read meta.txt, detections.txt, optional gt.txt, flows/ and images/."""
    root = Path(path)
    meta = kv.read_meta(root / "meta.txt")
    detections = mots.read_detections(root / "detections.txt")
    _check_grid((d.mask for d in detections), meta, "detections.txt")
    frames: list[list[Detection]] = [[] for _ in range(meta.frame_count)]
    for det in detections:
        if not 0 <= det.frame < meta.frame_count:
            raise ValueError(
                f"detections.txt: frame {det.frame} outside 0..{meta.frame_count - 1}"
            )
        frames[det.frame].append(det)

    flows: list[FlowField | None] = []
    for t in range(meta.frame_count - 1):
        flow_path = root / "flows" / f"{t:06d}.flo"
        if flow_path.is_file():
            flow = flo.read_flow(flow_path)
            if (flow.width, flow.height) != (meta.width, meta.height):
                raise ValueError(
                    f"{flow_path}: flow is {flow.width}x{flow.height}, "
                    f"sequence is {meta.width}x{meta.height}"
                )
            flows.append(flow)
        else:
            flows.append(None)

    gt_path = root / "gt.txt"
    gt_tracks = None
    if gt_path.is_file():
        gt_tracks = mots.read_gt(gt_path)
        _check_grid(
            (d.mask for t in gt_tracks for d in t.detections), meta, "gt.txt"
        )
        for track in gt_tracks:
            if any(d.frame >= meta.frame_count for d in track.detections):
                raise ValueError(f"gt.txt: track {track.id} exceeds the frame count")

    images = None
    if need_images:
        images = []
        for t in range(meta.frame_count):
            image_path = root / "images" / f"{t:06d}.ppm"
            if not image_path.is_file():
                raise ValueError(f"image missing: {image_path}")
            image = ppm.read_image(image_path)
            if image.shape[:2] != (meta.height, meta.width):
                raise ValueError(f"{image_path}: image does not match sequence size")
            images.append(image)

    return LoadedSequence(
        path=root, meta=meta, frames=frames, flows=flows,
        gt_tracks=gt_tracks, images=images,
    )
