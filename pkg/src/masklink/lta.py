"""Long-term association: merge tracklets separated by detection gaps.

Candidate pairs must pass three admissibility gates (temporal, spatial,
overlap) plus class equality; surviving pairs are merged greedily by
descending appearance similarity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from .maskops import mask_centroid
from .model import (
    BinaryMask,
    Detection,
    PipelineConfig,
    RefVariant,
    SequenceMeta,
    Tracklet,
)

log = logging.getLogger(__name__)

Role = Literal["earlier", "later"]

# A similarity callback gets the (earlier, later) tracklets of an admissible
# pair and returns a score in [-1, 1], or None when its data source cannot
# serve the pair.
SimilarityFn = Callable[[Tracklet, Tracklet], "float | None"]


@dataclass(frozen=True)
class PairCandidate:
    """An admissible tracklet pair, ordered so `earlier` starts first."""

    earlier: int
    later: int
    similarity: float | None = None


def temporal_cost(a: Tracklet, b: Tracklet, meta: SequenceMeta) -> float:
    """Seconds between a's last detection and b's first."""
    return abs(a.last_frame - b.first_frame) / meta.fps


def spatial_cost(a: Tracklet, b: Tracklet, meta: SequenceMeta) -> float:
    """L1 centroid displacement between the facing endpoint masks,
    normalized by the mean image side."""
    ax, ay = mask_centroid(a.detections[-1].mask)
    bx, by = mask_centroid(b.detections[0].mask)
    return 2.0 / (meta.height + meta.width) * (abs(ax - bx) + abs(ay - by))


def overlap_cost(a: Tracklet, b: Tracklet) -> int:
    """Number of frames where both tracklets have a detection."""
    return len(a.frame_set & b.frame_set)


def order_pair(t1: Tracklet, t2: Tracklet) -> tuple[Tracklet, Tracklet]:
    """Orient a pair so the earlier-starting tracklet comes first.

    Ties fall back to the earlier last frame, then the smaller id.
    """
    k1 = (t1.first_frame, t1.last_frame, t1.id)
    k2 = (t2.first_frame, t2.last_frame, t2.id)
    return (t1, t2) if k1 <= k2 else (t2, t1)


def admissible_pairs(
    tracklets: Sequence[Tracklet], cfg: PipelineConfig, meta: SequenceMeta
) -> list[PairCandidate]:
    """All same-class pairs within the temporal, spatial and overlap bounds.

    Bounds are inclusive: a pair sitting exactly on tau_t, tau_s or tau_o
    is admissible.
    """
    out = []
    by_id = {t.id: t for t in tracklets}
    if len(by_id) != len(tracklets):
        raise ValueError("duplicate tracklet ids")
    ids = sorted(by_id)
    for i, id1 in enumerate(ids):
        for id2 in ids[i + 1 :]:
            a, b = order_pair(by_id[id1], by_id[id2])
            if a.class_id != b.class_id:
                continue
            if temporal_cost(a, b, meta) > cfg.tau_t:
                continue
            if spatial_cost(a, b, meta) > cfg.tau_s:
                continue
            if overlap_cost(a, b) > cfg.tau_o:
                continue
            out.append(PairCandidate(earlier=a.id, later=b.id))
    return out


def select_references(
    t: Tracklet, variant: RefVariant, n: int, n_fallback: int, role: Role
) -> list[tuple[int, BinaryMask]]:
    """Pick the (frame, mask) anchors a similarity backend should use.

    For the earlier tracklet of a pair the anchors sit at the end: the last
    detection and, depending on the variant, the (n-1)-before-last.  For the
    later tracklet the selection mirrors to the start.  Tracklets shorter
    than n substitute the n_fallback offset.
    """
    length = len(t.detections)
    if length < 2:
        raise ValueError(f"tracklet {t.id} too short for reference selection")

    def offset_position(off: int) -> int | None:
        # 1-based position `off` steps into the tracklet from the near end
        pos = length - off + 1 if role == "earlier" else off
        return pos if 1 <= pos <= length else None

    positions: list[int] = [offset_position(1)]  # type: ignore[list-item]
    if variant is RefVariant.FRAME1:
        pass
    elif variant is RefVariant.FRAMES12:
        positions.append(offset_position(2))  # type: ignore[arg-type]
    elif variant is RefVariant.FRAMES15_2:
        far = offset_position(n)
        positions.append(far if far is not None else offset_position(n_fallback))  # type: ignore[arg-type]
    elif variant is RefVariant.FRAMES125:
        positions.append(offset_position(2))  # type: ignore[arg-type]
        far = offset_position(n)
        if far is not None:
            positions.append(far)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown reference variant {variant}")

    out = []
    for pos in positions:
        det = t.detections[pos - 1]
        out.append((det.frame, det.mask))
    return out


def _merge_detections(a: Tracklet, b: Tracklet) -> tuple:
    """Concatenate two detection chains, resolving shared frames.

    On a shared frame the higher-scoring detection survives; exact score
    ties keep the detection of the tracklet starting earlier (smaller id
    next).
    """
    first, second = order_pair(a, b)
    best: dict[int, tuple[float, Detection]] = {}
    for t in (first, second):
        for det in t.detections:
            if det.frame not in best or det.score > best[det.frame][0]:
                best[det.frame] = (det.score, det)
    return tuple(best[f][1] for f in sorted(best))


def greedy_merge(
    tracklets: Sequence[Tracklet],
    similarity: SimilarityFn,
    cfg: PipelineConfig,
    meta: SequenceMeta,
) -> list[Tracklet]:
    """Merge admissible pairs best-similarity-first.

    Pair similarities are computed once, up front.  After each merge the
    surviving pairs are re-keyed onto the merged tracklet and re-screened
    against the overlap bound (and class equality) only; their similarities
    are kept, since the anchor masks they were computed from do not change.
    A tracklet can therefore take part in several merges.

    Pairs whose backend cannot produce a similarity are skipped with a
    warning.  Merges require similarity strictly above theta_l.
    """
    by_id: dict[int, Tracklet] = {t.id: t for t in tracklets}
    if len(by_id) != len(tracklets):
        raise ValueError("duplicate tracklet ids")

    pool: list[dict] = []
    for cand in admissible_pairs(tracklets, cfg, meta):
        sim = similarity(by_id[cand.earlier], by_id[cand.later])
        if sim is None:
            log.warning(
                "no similarity for tracklet pair (%d, %d); pair skipped",
                cand.earlier,
                cand.later,
            )
            continue
        pool.append({"a": cand.earlier, "b": cand.later, "sim": sim})

    while True:
        best = None
        best_key = None
        for entry in pool:
            if entry["sim"] <= cfg.theta_l:
                continue
            ta, tb = by_id[entry["a"]], by_id[entry["b"]]
            key = (
                -entry["sim"],
                ta.first_frame,
                tb.first_frame,
                ta.id,
                tb.id,
            )
            if best_key is None or key < best_key:
                best_key = key
                best = entry
        if best is None:
            break

        ta, tb = by_id[best["a"]], by_id[best["b"]]
        first, _ = order_pair(ta, tb)
        merged = Tracklet(
            id=first.id, class_id=ta.class_id, detections=_merge_detections(ta, tb)
        )
        dropped = {ta.id, tb.id}
        del by_id[ta.id]
        del by_id[tb.id]
        by_id[merged.id] = merged

        survivors = []
        for entry in pool:
            touched = entry["a"] in dropped or entry["b"] in dropped
            if entry["a"] in dropped:
                entry["a"] = merged.id
            if entry["b"] in dropped:
                entry["b"] = merged.id
            if entry["a"] == entry["b"]:
                continue
            if touched:
                ea, eb = by_id[entry["a"]], by_id[entry["b"]]
                if ea.class_id != eb.class_id:
                    continue
                if overlap_cost(ea, eb) > cfg.tau_o:
                    continue
            survivors.append(entry)
        pool = survivors

    return [by_id[i] for i in sorted(by_id)]


def final_filter(tracks: Sequence[Tracklet], cfg: PipelineConfig) -> list[Tracklet]:
    """Keep tracks whose best detection score reaches theta_f."""
    return [
        t for t in tracks if max(d.score for d in t.detections) >= cfg.theta_f
    ]
