"""The three export operations: flow files, a heatmap container, a
feature table.  Each returns the number of artifacts written."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import formats, models

log = logging.getLogger(__name__)


def _engine_guard(engine: str, kind: str, checkpoint: str | None) -> None:
    if engine == "classic":
        return
    if engine == "torch":
        models.load_torch_engine(kind, checkpoint)  # raises with instructions
        return
    raise ValueError(f"unknown engine {engine!r}; choose classic or torch")


def export_flow(
    seq_dir: str | Path,
    out_dir: str | Path,
    *,
    block: int = models.DEFAULT_BLOCK,
    radius: int = models.DEFAULT_RADIUS,
    engine: str = "classic",
    checkpoint: str | None = None,
) -> int:
    """One .flo file per adjacent frame pair of seq/images."""
    _engine_guard(engine, "flow", checkpoint)
    images = formats.read_image_dir(seq_dir)
    if len(images) < 2:
        raise ValueError(f"{seq_dir}: need at least 2 frames, found {len(images)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in range(len(images) - 1):
        vectors = models.block_flow(images[t], images[t + 1], block, radius)
        formats.write_flo(vectors, out / f"{t:06d}.flo")
    log.info("wrote %d flow files to %s", len(images) - 1, out)
    return len(images) - 1


def export_heatmaps(
    seq_dir: str | Path,
    manifest_path: str | Path,
    out_path: str | Path,
    *,
    engine: str = "classic",
    checkpoint: str | None = None,
) -> int:
    """Fill every propagation job of the pair manifest into one container."""
    _engine_guard(engine, "heatmap", checkpoint)
    doc = formats.read_manifest(manifest_path)
    width, height = doc["width"], doc["height"]
    jobs = [job for pair in doc["pairs"] for job in pair["jobs"]]
    images: list[np.ndarray] = []
    if jobs:  # an empty manifest must not require images on disk
        images = formats.read_image_dir(seq_dir)
    entries: dict[tuple[int, int, int], np.ndarray] = {}
    for job in jobs:
        key = (job["ref_tid"], job["ref_frame"], job["query_frame"])
        if key in entries:
            continue
        for frame in (job["ref_frame"], job["query_frame"]):
            if not 0 <= frame < len(images):
                raise ValueError(
                    f"{manifest_path}: job references frame {frame}, "
                    f"sequence has {len(images)}"
                )
        mask = formats.runs_to_mask(job["ref_runs"], height, width)
        entries[key] = models.template_heatmap(
            images[job["ref_frame"]], mask, images[job["query_frame"]]
        )
    formats.write_heatmaps(entries, width, height, out_path)
    log.info("wrote %d heatmaps to %s", len(entries), out_path)
    return len(entries)


def export_reid(
    seq_dir: str | Path,
    out_path: str | Path,
    *,
    manifest_path: str | Path | None = None,
    detections_path: str | Path | None = None,
    bins: int = models.DEFAULT_BINS,
    engine: str = "classic",
    checkpoint: str | None = None,
) -> int:
    """Appearance vector per detection, keyed the way the consumer looks up.

    With a manifest, keys are (tracklet id, frame) — what the merge stage
    queries.  With a raw detection file, keys are (per-frame index, frame).
    Exactly one source must be given.
    """
    _engine_guard(engine, "reid", checkpoint)
    if (manifest_path is None) == (detections_path is None):
        raise ValueError("give exactly one of a manifest or a detection file")

    triples: list[tuple[int, int, list[int]]] = []
    if manifest_path is not None:
        doc = formats.read_manifest(manifest_path)
        height, width = doc["height"], doc["width"]
        for tracklet in doc["tracklets"]:
            for det in tracklet["detections"]:
                triples.append((tracklet["id"], det["frame"], det["runs"]))
    else:
        rows = formats.read_detections(detections_path)
        if rows:
            height, width = rows[0][3], rows[0][4]
        for frame, index, _class_id, height, width, runs, _score in rows:
            triples.append((index, frame, runs))

    entries: dict[tuple[int, int], np.ndarray] = {}
    if triples:
        images = formats.read_image_dir(seq_dir)
        for key_id, frame, runs in triples:
            if not 0 <= frame < len(images):
                raise ValueError(
                    f"detection references frame {frame}, sequence has {len(images)}"
                )
            mask = formats.runs_to_mask(runs, height, width)
            entries[(key_id, frame)] = models.color_feature(images[frame], mask, bins)
    formats.write_reid(entries, bins ** 3, out_path)
    log.info("wrote %d feature vectors to %s", len(entries), out_path)
    return len(entries)
