"""Tracklet pair manifest: the hand-off document for external propagation.

After short-term association the pipeline can stop and describe, as JSON,
its tracklets and every heatmap it will later ask for (one job per
reference anchor and query frame).  An external tool fills a heatmap
container for exactly those keys; the pipeline then resumes with the
heatmap backend.

Masks travel as plain run-length arrays (column-major, background first)
so consumers need no bit-packed string decoder.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..lta import admissible_pairs
from ..model import BinaryMask, PipelineConfig, SequenceMeta, Tracklet
from ..similarity import pair_jobs


def build_manifest(
    tracklets: Sequence[Tracklet], cfg: PipelineConfig, meta: SequenceMeta
) -> dict:
    by_id = {t.id: t for t in tracklets}
    pairs = []
    for cand in admissible_pairs(tracklets, cfg, meta):
        a, b = by_id[cand.earlier], by_id[cand.later]
        jobs = []
        for job in pair_jobs(a, b, cfg):
            jobs.append(
                {
                    "ref_tid": job.ref_tid,
                    "ref_frame": job.ref_frame,
                    "ref_runs": list(job.ref_mask.runs),
                    "query_tid": job.query_tid,
                    "query_frame": job.query_frame,
                }
            )
        pairs.append({"a": a.id, "b": b.id, "jobs": jobs})
    return {
        "sequence_id": meta.sequence_id,
        "width": meta.width,
        "height": meta.height,
        "fps": meta.fps,
        "tracklets": [
            {
                "id": t.id,
                "class_id": t.class_id,
                "detections": [
                    {"frame": d.frame, "score": d.score, "runs": list(d.mask.runs)}
                    for d in t.detections
                ],
            }
            for t in tracklets
        ],
        "pairs": pairs,
    }


def write_manifest(manifest: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=1, sort_keys=True)
        handle.write("\n")


def read_manifest(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    for key in ("sequence_id", "width", "height", "fps", "tracklets", "pairs"):
        if key not in doc:
            raise ValueError(f"{path}: manifest missing key {key!r}")
    return doc


def manifest_job_keys(manifest: dict) -> set[tuple[int, int, int]]:
    """All (ref_tid, ref_frame, query_frame) heatmap keys the manifest asks for."""
    keys = set()
    for pair in manifest["pairs"]:
        for job in pair["jobs"]:
            keys.add((job["ref_tid"], job["ref_frame"], job["query_frame"]))
    return keys


def mask_from_runs(runs: Sequence[int], height: int, width: int) -> BinaryMask:
    return BinaryMask(width=width, height=height, runs=tuple(int(r) for r in runs))
