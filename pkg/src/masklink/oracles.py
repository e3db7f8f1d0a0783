"""Ground-truth-assisted association upper bounds.

Both oracles replace part of the pipeline with ground truth: one re-links
the short-term tracklets perfectly, the other re-links the raw detections.
Scoring their outputs brackets how much headroom the long-term stage and
the whole association chain leave.
"""

from __future__ import annotations

from typing import Sequence

from .maskops import mask_iou
from .metrics import CLEAR_THRESHOLD, GtAnnotation
from .model import Detection, Tracklet


def flatten_gt(gts: Sequence[Tracklet]) -> list[GtAnnotation]:
    out = []
    for t in gts:
        for det in t.detections:
            out.append(
                GtAnnotation(track_id=t.id, frame=det.frame, class_id=t.class_id, mask=det.mask)
            )
    return out


def _gt_by_frame(gts: Sequence[Tracklet]) -> dict[int, list[GtAnnotation]]:
    by_frame: dict[int, list[GtAnnotation]] = {}
    for ann in flatten_gt(gts):
        by_frame.setdefault(ann.frame, []).append(ann)
    return by_frame


def _best_gt(det: Detection, anns: Sequence[GtAnnotation]) -> GtAnnotation | None:
    """The ground-truth mask this detection covers at IoU above 0.5, if any."""
    best = None
    best_iou = CLEAR_THRESHOLD
    for ann in anns:
        iou = mask_iou(det.mask, ann.mask)
        if iou > best_iou:
            best = ann
            best_iou = iou
    return best


def oracle_lta(tracklets: Sequence[Tracklet], gts: Sequence[Tracklet]) -> list[Tracklet]:
    """Re-link short-term tracklets with ground-truth identities.

    Each tracklet adopts the ground-truth id claiming the most of its
    detections (ties to the smaller id); tracklets matching no ground truth
    are deleted.  Tracklets sharing an id are concatenated, and a frame
    covered twice keeps the higher-scoring detection.
    """
    by_frame = _gt_by_frame(gts)
    gt_class = {t.id: t.class_id for t in gts}

    votes: dict[int, dict[int, Detection]] = {}
    for t in tracklets:
        counts: dict[int, int] = {}
        for det in t.detections:
            ann = _best_gt(det, by_frame.get(det.frame, []))
            if ann is not None:
                counts[ann.track_id] = counts.get(ann.track_id, 0) + 1
        if counts:
            winner = max(sorted(counts), key=lambda g: counts[g])
            votes.setdefault(winner, {})
            for det in t.detections:
                held = votes[winner].get(det.frame)
                if held is None or det.score > held.score:
                    votes[winner][det.frame] = det

    out = []
    for gid in sorted(votes):
        dets = tuple(votes[gid][f] for f in sorted(votes[gid]))
        out.append(Tracklet(id=gid, class_id=gt_class[gid], detections=dets))
    return out


def oracle_slta(detections: Sequence[Detection], gts: Sequence[Tracklet]) -> list[Tracklet]:
    """Group filtered detections directly by ground-truth identity.

    A detection joins the ground-truth track it covers at IoU above 0.5;
    unmatched detections are dropped.  When several detections of one frame
    claim the same identity, the best-overlapping one (higher score on a
    tie) survives.
    """
    by_frame = _gt_by_frame(gts)
    gt_class = {t.id: t.class_id for t in gts}

    chosen: dict[int, dict[int, tuple[float, float, Detection]]] = {}
    for det in detections:
        ann = _best_gt(det, by_frame.get(det.frame, []))
        if ann is None:
            continue
        iou = mask_iou(det.mask, ann.mask)
        slot = chosen.setdefault(ann.track_id, {})
        held = slot.get(det.frame)
        if held is None or (iou, det.score) > (held[0], held[1]):
            slot[det.frame] = (iou, det.score, det)

    out = []
    for gid in sorted(chosen):
        dets = tuple(chosen[gid][f][2] for f in sorted(chosen[gid]))
        out.append(Tracklet(id=gid, class_id=gt_class[gid], detections=dets))
    return out
