"""Domain types: config defaults, detection filtering, class voting."""

from __future__ import annotations

import pytest

from masklink.model import (
    Backend,
    Detection,
    PipelineConfig,
    RefVariant,
    SequenceMeta,
    Tracklet,
    filter_detections,
    tracklet_class,
)

from conftest import det, rect_mask, simple_meta, tracklet


def test_default_configuration_values():
    cfg = PipelineConfig()
    assert cfg.theta_d == 0.50
    assert cfg.theta_a == 128
    assert cfg.theta_s == 0.15
    assert cfg.tau_t == 1.5
    assert cfg.tau_s == 0.2
    assert cfg.tau_o == 1
    assert cfg.n_ref == 5
    assert cfg.n_ref_fallback == 2
    assert cfg.theta_l == 0.30
    assert cfg.theta_f == 0.90
    assert cfg.ref_variant is RefVariant.FRAMES15_2
    assert cfg.backend is Backend.STM_HEATMAP


def test_config_replace_and_validation():
    cfg = PipelineConfig().replace(theta_l=0.5)
    assert cfg.theta_l == 0.5
    assert PipelineConfig().theta_l == 0.30
    with pytest.raises(ValueError):
        PipelineConfig(theta_d=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(n_ref=1)
    with pytest.raises(ValueError):
        PipelineConfig(tau_t=-0.1)


def test_meta_validation():
    with pytest.raises(ValueError):
        SequenceMeta(sequence_id="x", width=0, height=5, fps=10, frame_count=3)
    with pytest.raises(ValueError):
        SequenceMeta(sequence_id="x", width=5, height=5, fps=0, frame_count=3)


def test_filter_boundaries_inclusive():
    import numpy as np

    from masklink.model import BinaryMask

    meta = simple_meta(width=40, height=40)
    # a 16x8 rectangle has exactly the default minimum area of 128 pixels
    at_area = det(0, rect_mask(40, 40, 0, 0, 16, 8), score=0.5)
    arr = np.zeros((40, 40), dtype=bool)
    arr[0:8, 0:16] = True
    arr[0, 0] = False  # 127 pixels: one short of the floor
    below_area = det(0, BinaryMask.from_array(arr), score=0.9)
    below_score = det(0, rect_mask(40, 40, 20, 20, 16, 16), score=0.4999)
    kept = filter_detections([at_area, below_area, below_score], PipelineConfig(), meta)
    assert at_area.mask.area == 128
    assert below_area.mask.area == 127
    assert kept == [at_area]


def test_filter_keeps_order():
    meta = simple_meta(width=40, height=40)
    a = det(0, rect_mask(40, 40, 0, 0, 13, 10), score=0.9)
    b = det(0, rect_mask(40, 40, 20, 0, 13, 10), score=0.8)
    assert filter_detections([a, b], PipelineConfig(theta_a=100), meta) == [a, b]


def test_filter_rejects_wrong_grid():
    meta = simple_meta(width=40, height=40)
    bad = det(3, rect_mask(30, 40, 0, 0, 16, 16))
    with pytest.raises(ValueError, match="frame 3"):
        filter_detections([bad], PipelineConfig(), meta)


def test_detection_validation():
    m = rect_mask(4, 4, 0, 0, 2, 2)
    with pytest.raises(ValueError):
        Detection(frame=-1, class_id=1, score=0.5, mask=m)
    with pytest.raises(ValueError):
        Detection(frame=0, class_id=1, score=1.2, mask=m)


def test_tracklet_frame_order_enforced():
    m = rect_mask(4, 4, 0, 0, 2, 2)
    with pytest.raises(ValueError):
        Tracklet(id=1, class_id=1, detections=(det(2, m), det(1, m)))
    with pytest.raises(ValueError):
        Tracklet(id=1, class_id=1, detections=(det(1, m), det(1, m)))
    with pytest.raises(ValueError):
        Tracklet(id=1, class_id=1, detections=())
    t = tracklet(1, [det(0, m), det(2, m)])
    assert t.first_frame == 0
    assert t.last_frame == 2
    assert t.frame_set == frozenset({0, 2})


def test_class_vote_confidence_weighted():
    m = rect_mask(4, 4, 0, 0, 2, 2)
    dets = [
        det(0, m, score=0.9, class_id=2),
        det(1, m, score=0.3, class_id=1),
        det(2, m, score=0.3, class_id=1),
    ]
    # class 2 holds 0.9 against 0.6 for class 1 despite fewer detections
    assert tracklet_class(dets) == 2


def test_class_vote_tie_takes_smaller_id():
    m = rect_mask(4, 4, 0, 0, 2, 2)
    dets = [det(0, m, score=0.5, class_id=7), det(1, m, score=0.5, class_id=3)]
    assert tracklet_class(dets) == 3


def test_class_vote_accepts_tracklet():
    m = rect_mask(4, 4, 0, 0, 2, 2)
    t = tracklet(1, [det(0, m, class_id=4), det(1, m, class_id=4)], class_id=4)
    assert tracklet_class(t) == 4
