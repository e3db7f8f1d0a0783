"""Short-term association: chain per-frame detections into tracklets by
warping masks along optical flow and matching on overlap."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .assignment import AssignmentResult, hungarian_min
from .maskops import FlowField, mask_iou, warp_mask
from .model import Detection, PipelineConfig, Tracklet, tracklet_class

MIN_TRACKLET_LENGTH = 2


def sta_step(
    prev: Sequence[Detection],
    nxt: Sequence[Detection],
    flow: FlowField,
    theta_s: float,
) -> AssignmentResult:
    """Match one frame's detections to the next frame's.

    Costs are negated mask IoU between flow-warped previous masks and next
    masks; matches at or below theta_s are demoted to unmatched.  Class
    labels are deliberately ignored here.
    """
    if not prev or not nxt:
        return AssignmentResult(
            (), tuple(range(len(prev))), tuple(range(len(nxt)))
        )
    warped = [warp_mask(d.mask, flow) for d in prev]
    iou = np.zeros((len(prev), len(nxt)))
    for i, wm in enumerate(warped):
        for j, d in enumerate(nxt):
            iou[i, j] = mask_iou(wm, d.mask)
    raw = hungarian_min(-iou)
    pairs = []
    demoted_prev = []
    demoted_next = []
    for i, j in raw.pairs:
        if iou[i, j] > theta_s:
            pairs.append((i, j))
        else:
            demoted_prev.append(i)
            demoted_next.append(j)
    return AssignmentResult(
        pairs=tuple(pairs),
        unmatched_prev=tuple(sorted(raw.unmatched_prev + tuple(demoted_prev))),
        unmatched_next=tuple(sorted(raw.unmatched_next + tuple(demoted_next))),
    )


def build_tracklets(
    frames: Sequence[Sequence[Detection]],
    flows: Sequence[FlowField | None],
    cfg: PipelineConfig,
) -> list[Tracklet]:
    """Run short-term association over a whole sequence.

    Args:
        frames: detections per frame, index == frame number.
        flows: flows[t] maps frame t to t+1; may be None for pairs where
            either side has no detections.
        cfg: supplies theta_s.

    Returns:
        Tracklets with contiguous frames, voted class labels, and single
        detection chains removed.  Ids number the chains in creation order.
    """
    if len(flows) < max(len(frames) - 1, 0):
        raise ValueError(
            f"{len(frames)} frames need {len(frames) - 1} flows, got {len(flows)}"
        )
    for t, dets in enumerate(frames):
        for d in dets:
            if d.frame != t:
                raise ValueError(f"detection labeled frame {d.frame} listed under frame {t}")

    chains: list[list[Detection]] = []
    # chain index carried by each detection of the current frame
    open_chains: list[int] = []
    for det in frames[0] if frames else []:
        open_chains.append(len(chains))
        chains.append([det])

    for t in range(1, len(frames)):
        prev_dets = frames[t - 1]
        next_dets = frames[t]
        next_open: list[int] = [-1] * len(next_dets)
        if prev_dets and next_dets:
            flow = flows[t - 1]
            if flow is None:
                raise ValueError(f"missing flow for frame pair ({t - 1}, {t})")
            step = sta_step(prev_dets, next_dets, flow, cfg.theta_s)
            for i, j in step.pairs:
                chain = open_chains[i]
                chains[chain].append(next_dets[j])
                next_open[j] = chain
        for j, det in enumerate(next_dets):
            if next_open[j] == -1:
                next_open[j] = len(chains)
                chains.append([det])
        open_chains = next_open

    tracklets = []
    next_id = 1
    for chain in chains:
        if len(chain) < MIN_TRACKLET_LENGTH:
            continue
        tracklets.append(
            Tracklet(id=next_id, class_id=tracklet_class(chain), detections=tuple(chain))
        )
        next_id += 1
    return tracklets
