"""Tracking quality metrics over mask overlap.

All matching is done on mask IoU.  The detection/association decomposition
uses a 19-level threshold grid; the CLEAR-style scores match at IoU strictly
above 0.5 with a preference for keeping the previous frame's pairings.
Metrics are class-agnostic: filter both sides by class first if per-class
scores are wanted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assignment import hungarian_min
from .maskops import mask_iou
from .model import BinaryMask, Tracklet

ALPHAS: tuple[float, ...] = tuple(k / 20 for k in range(1, 20))
CLEAR_THRESHOLD = 0.5


@dataclass(frozen=True)
class GtAnnotation:
    """One ground-truth mask: a detection-shaped record plus its track id."""

    track_id: int
    frame: int
    class_id: int
    mask: BinaryMask


@dataclass(frozen=True)
class EvalReport:
    hota: float
    deta: float
    assa: float
    smotsa: float
    motsa: float
    smotsp: float
    idf1: float
    tp: int
    fp: int
    fn: int
    idsw: int
    gt_count: int
    pred_count: int
    alphas: tuple[float, ...]
    hota_alpha: tuple[float, ...]
    deta_alpha: tuple[float, ...]
    assa_alpha: tuple[float, ...]
    degenerate_empty: bool


def _frame_items(tracks: Sequence[Tracklet]) -> dict[int, list[tuple[int, BinaryMask]]]:
    out: dict[int, list[tuple[int, BinaryMask]]] = {}
    for t in tracks:
        for det in t.detections:
            out.setdefault(det.frame, []).append((t.id, det.mask))
    return out


def _check_tracks(tracks: Sequence[Tracklet], side: str) -> None:
    ids = [t.id for t in tracks]
    if len(ids) != len(set(ids)):
        raise ValueError(f"duplicate {side} track ids")
    for frame, items in sorted(_frame_items(tracks).items()):
        union = None
        for _, mask in items:
            dense = mask.to_array()
            if union is None:
                union = dense.copy()
            else:
                if (union & dense).any():
                    raise ValueError(f"frame {frame}: overlapping {side} masks")
                union |= dense
    # mixed grids surface as an error in mask_iou later; catch them up front
    grids = {(t.detections[0].mask.width, t.detections[0].mask.height) for t in tracks}
    for t in tracks:
        for det in t.detections:
            grids.add((det.mask.width, det.mask.height))
    if len(grids) > 1:
        raise ValueError(f"inconsistent {side} mask dimensions: {sorted(grids)}")


def _iou_matrix(
    preds: Sequence[tuple[int, BinaryMask]], gts: Sequence[tuple[int, BinaryMask]]
) -> np.ndarray:
    iou = np.zeros((len(preds), len(gts)))
    for i, (_, pm) in enumerate(preds):
        for j, (_, gm) in enumerate(gts):
            iou[i, j] = mask_iou(pm, gm)
    return iou


def _match_from_matrix(
    iou: np.ndarray, candidate: np.ndarray
) -> list[tuple[int, int]]:
    """Maximize total IoU over candidate pairs only."""
    rows, cols = iou.shape
    if rows == 0 or cols == 0 or not candidate.any():
        return []
    penalty = float(min(rows, cols)) + 2.0
    cost = np.where(candidate, -iou, penalty)
    result = hungarian_min(cost)
    return [(i, j) for i, j in result.pairs if candidate[i, j]]


def match_frame(
    preds: Sequence[BinaryMask], gts: Sequence[BinaryMask], alpha: float
) -> list[tuple[int, int]]:
    """Bijective matching of one frame's masks at an IoU floor.

    Returns (pred index, gt index) pairs maximizing total IoU among pairs
    with IoU >= alpha.
    """
    iou = _iou_matrix([(i, m) for i, m in enumerate(preds)], [(j, m) for j, m in enumerate(gts)])
    return _match_from_matrix(iou, iou >= alpha)


def _hota_curves(
    preds: Sequence[Tracklet], gts: Sequence[Tracklet]
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]:
    pred_frames = _frame_items(preds)
    gt_frames = _frame_items(gts)
    pred_count = sum(len(v) for v in pred_frames.values())
    gt_count = sum(len(v) for v in gt_frames.values())
    pred_sizes: dict[int, int] = {t.id: len(t.detections) for t in preds}
    gt_sizes: dict[int, int] = {t.id: len(t.detections) for t in gts}

    n_alpha = len(ALPHAS)
    tp = [0] * n_alpha
    pair_counts: list[dict[tuple[int, int], int]] = [dict() for _ in range(n_alpha)]

    for frame in sorted(set(pred_frames) | set(gt_frames)):
        p_items = pred_frames.get(frame, [])
        g_items = gt_frames.get(frame, [])
        if not p_items or not g_items:
            continue
        iou = _iou_matrix(p_items, g_items)
        for ai, alpha in enumerate(ALPHAS):
            for i, j in _match_from_matrix(iou, iou >= alpha):
                tp[ai] += 1
                key = (p_items[i][0], g_items[j][0])
                pair_counts[ai][key] = pair_counts[ai].get(key, 0) + 1

    deta, assa, hota_a = [], [], []
    for ai in range(n_alpha):
        denom = gt_count + pred_count - tp[ai]
        d = tp[ai] / denom if denom > 0 else 0.0
        if tp[ai] > 0:
            acc = 0.0
            for (pid, gid), pc in pair_counts[ai].items():
                union = gt_sizes[gid] + pred_sizes[pid] - pc
                acc += pc * (pc / union)
            a = acc / tp[ai]
        else:
            a = 0.0
        deta.append(d)
        assa.append(a)
        hota_a.append(float(np.sqrt(d * a)))
    return tuple(hota_a), tuple(deta), tuple(assa)


def hota(preds: Sequence[Tracklet], gts: Sequence[Tracklet]) -> tuple[float, float, float]:
    """Headline (HOTA, DetA, AssA): means over the threshold grid."""
    hota_a, deta_a, assa_a = _hota_curves(preds, gts)
    return (
        float(np.mean(hota_a)),
        float(np.mean(deta_a)),
        float(np.mean(assa_a)),
    )


def clear_mots(
    preds: Sequence[Tracklet], gts: Sequence[Tracklet]
) -> tuple[float, float, float, int, int, int]:
    """CLEAR-style scores: (sMOTSA, MOTSA, sMOTSP, FP, FN, IDSw).

    Matching is per frame at IoU strictly above 0.5, keeping the previous
    frame's pairing when it still clears the bar.  An identity switch is
    counted when a ground-truth track is matched in two consecutive frames
    to different predictions; gaps do not produce switches.
    """
    pred_frames = _frame_items(preds)
    gt_frames = _frame_items(gts)
    gt_count = sum(len(v) for v in gt_frames.values())
    pred_count = sum(len(v) for v in pred_frames.values())

    tp = 0
    soft = 0.0
    fp = 0
    fn = 0
    idsw = 0
    prev_no = None
    prev_matches: dict[int, int] = {}

    for frame in sorted(set(pred_frames) | set(gt_frames)):
        p_items = pred_frames.get(frame, [])
        g_items = gt_frames.get(frame, [])
        iou = _iou_matrix(p_items, g_items)
        p_index = {pid: i for i, (pid, _) in enumerate(p_items)}
        matches: dict[int, int] = {}
        used_p: set[int] = set()
        used_g: set[int] = set()
        if prev_no == frame - 1:
            for j, (gid, _) in enumerate(g_items):
                pid = prev_matches.get(gid)
                if pid is None or pid not in p_index:
                    continue
                i = p_index[pid]
                if iou[i, j] > CLEAR_THRESHOLD:
                    matches[gid] = pid
                    used_p.add(i)
                    used_g.add(j)
        free_p = [i for i in range(len(p_items)) if i not in used_p]
        free_g = [j for j in range(len(g_items)) if j not in used_g]
        if free_p and free_g:
            sub = iou[np.ix_(free_p, free_g)]
            for si, sj in _match_from_matrix(sub, sub > CLEAR_THRESHOLD):
                i, j = free_p[si], free_g[sj]
                matches[g_items[j][0]] = p_items[i][0]
                used_p.add(i)
                used_g.add(j)

        for gid, pid in matches.items():
            i = p_index[pid]
            j = next(jj for jj, (g, _) in enumerate(g_items) if g == gid)
            soft += iou[i, j]
            if prev_no == frame - 1 and gid in prev_matches and prev_matches[gid] != pid:
                idsw += 1
        tp += len(matches)
        fp += len(p_items) - len(matches)
        fn += len(g_items) - len(matches)
        prev_no = frame
        prev_matches = matches

    if gt_count > 0:
        smotsa = (soft - fp - idsw) / gt_count
        motsa = (tp - fp - idsw) / gt_count
    else:
        degenerate = pred_count == 0
        smotsa = motsa = 1.0 if degenerate else 0.0
    smotsp = soft / tp if tp > 0 else 0.0
    return (float(smotsa), float(motsa), float(smotsp), fp, fn, idsw)


def idf1(preds: Sequence[Tracklet], gts: Sequence[Tracklet]) -> float:
    """Identity F1 from one global track-to-track matching.

    Tracks correspond in a frame when their masks overlap at IoU above 0.5;
    the global matching maximizes the total number of corresponding frames.
    """
    pred_frames = _frame_items(preds)
    gt_frames = _frame_items(gts)
    gt_count = sum(len(v) for v in gt_frames.values())
    pred_count = sum(len(v) for v in pred_frames.values())
    if gt_count == 0 and pred_count == 0:
        return 1.0
    if not preds or not gts:
        return 0.0

    gid_index = {t.id: i for i, t in enumerate(gts)}
    pid_index = {t.id: i for i, t in enumerate(preds)}
    overlap = np.zeros((len(gts), len(preds)))
    for frame in set(pred_frames) & set(gt_frames):
        p_items = pred_frames[frame]
        g_items = gt_frames[frame]
        iou = _iou_matrix(p_items, g_items)
        for i, (pid, _) in enumerate(p_items):
            for j, (gid, _) in enumerate(g_items):
                if iou[i, j] > CLEAR_THRESHOLD:
                    overlap[gid_index[gid], pid_index[pid]] += 1

    result = hungarian_min(-overlap)
    idtp = sum(overlap[i, j] for i, j in result.pairs)
    return float(2.0 * idtp / (gt_count + pred_count))


def evaluate(preds: Sequence[Tracklet], gts: Sequence[Tracklet]) -> EvalReport:
    """Full metric suite over one sequence.

    Both sides are validated: unique track ids, one mask per track per frame
    position, pairwise-disjoint masks within every frame.  An entirely empty
    problem (no gt, no predictions) scores 1.0 everywhere and is flagged.
    """
    _check_tracks(preds, "prediction")
    _check_tracks(gts, "ground-truth")
    gt_count = sum(len(t.detections) for t in gts)
    pred_count = sum(len(t.detections) for t in preds)
    degenerate = gt_count == 0 and pred_count == 0

    if degenerate:
        ones = tuple(1.0 for _ in ALPHAS)
        return EvalReport(
            hota=1.0, deta=1.0, assa=1.0, smotsa=1.0, motsa=1.0, smotsp=1.0,
            idf1=1.0, tp=0, fp=0, fn=0, idsw=0, gt_count=0, pred_count=0,
            alphas=ALPHAS, hota_alpha=ones, deta_alpha=ones, assa_alpha=ones,
            degenerate_empty=True,
        )

    hota_a, deta_a, assa_a = _hota_curves(preds, gts)
    smotsa, motsa, smotsp, fp, fn, idsw = clear_mots(preds, gts)
    tp_clear = pred_count - fp
    return EvalReport(
        hota=float(np.mean(hota_a)),
        deta=float(np.mean(deta_a)),
        assa=float(np.mean(assa_a)),
        smotsa=smotsa,
        motsa=motsa,
        smotsp=smotsp,
        idf1=idf1(preds, gts),
        tp=tp_clear,
        fp=fp,
        fn=fn,
        idsw=idsw,
        gt_count=gt_count,
        pred_count=pred_count,
        alphas=ALPHAS,
        hota_alpha=hota_a,
        deta_alpha=deta_a,
        assa_alpha=assa_a,
        degenerate_empty=False,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable metric table."""
    rows = [
        ("HOTA", report.hota), ("DetA", report.deta), ("AssA", report.assa),
        ("sMOTSA", report.smotsa), ("MOTSA", report.motsa), ("sMOTSP", report.smotsp),
        ("IDF1", report.idf1),
    ]
    lines = ["metric     value", "-----------------"]
    for name, value in rows:
        lines.append(f"{name:<10} {value:.4f}")
    lines.append(f"TP={report.tp} FP={report.fp} FN={report.fn} IDSw={report.idsw}")
    lines.append(f"gt masks={report.gt_count} predicted masks={report.pred_count}")
    if report.degenerate_empty:
        lines.append("degenerate: no ground truth and no predictions")
    return "\n".join(lines)


def report_kv_lines(report: EvalReport) -> list[str]:
    """Machine-readable key = value lines."""
    out = []
    for key in ("hota", "deta", "assa", "smotsa", "motsa", "smotsp", "idf1"):
        out.append(f"{key} = {getattr(report, key)!r}")
    for key in ("tp", "fp", "fn", "idsw", "gt_count", "pred_count"):
        out.append(f"{key} = {getattr(report, key)}")
    out.append(f"degenerate_empty = {str(report.degenerate_empty).lower()}")
    return out


def curves_csv_lines(report: EvalReport) -> list[str]:
    out = ["alpha,deta,assa,hota"]
    for alpha, d, a, h in zip(report.alphas, report.deta_alpha, report.assa_alpha, report.hota_alpha):
        out.append(f"{alpha!r},{d!r},{a!r},{h!r}")
    return out
