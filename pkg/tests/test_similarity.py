"""Similarity backends: heatmap cosine, color histograms, feature vectors."""

from __future__ import annotations

import numpy as np
import pytest

from masklink.model import Backend, PipelineConfig, RefVariant
from masklink.similarity import (
    Heatmap,
    PropagationJob,
    cosine_heatmap_mask,
    cosine_vectors,
    make_backend,
    pair_jobs,
    sim_reid,
    sim_rgb,
    sim_stm,
)

from conftest import det, rect_mask, tracklet

H, W = 4, 4


def track_frames(tid, frames, x=0, y=0):
    return tracklet(
        tid, [det(f, rect_mask(H, W, x, y, 2, 2)) for f in frames]
    )


class DictProvider:
    """Heatmap source backed by a {(ref_tid, ref_frame, query_frame): Heatmap} table."""

    def __init__(self, table):
        self.table = table
        self.calls = []

    def propagate(self, ref_tid, ref_frame, ref_mask, query_frame):
        self.calls.append((ref_tid, ref_frame, query_frame))
        return self.table.get((ref_tid, ref_frame, query_frame))


# ------------------------------------------------------------- primitives


def test_heatmap_validates_shape_and_range():
    Heatmap(width=3, height=2, values=np.zeros((2, 3)))
    with pytest.raises(ValueError, match="does not match"):
        Heatmap(width=3, height=2, values=np.zeros((3, 2)))
    with pytest.raises(ValueError, match="lie in"):
        Heatmap(width=2, height=2, values=np.full((2, 2), 1.5))
    with pytest.raises(ValueError, match="lie in"):
        Heatmap(width=2, height=2, values=np.full((2, 2), np.nan))


def test_cosine_heatmap_mask_values():
    mask = rect_mask(2, 2, 0, 0, 2, 1)  # top row of a 2x2 grid
    exact = Heatmap(width=2, height=2, values=mask.to_array().astype(float))
    assert cosine_heatmap_mask(exact, mask) == pytest.approx(1.0)
    flat = Heatmap(width=2, height=2, values=np.full((2, 2), 0.5))
    assert cosine_heatmap_mask(flat, mask) == pytest.approx(1.0 / np.sqrt(2.0))
    off = Heatmap(width=2, height=2, values=np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert cosine_heatmap_mask(off, mask) == 0.0
    zero = Heatmap(width=2, height=2, values=np.zeros((2, 2)))
    assert cosine_heatmap_mask(zero, mask) == 0.0


def test_cosine_heatmap_mask_grid_mismatch():
    h = Heatmap(width=3, height=3, values=np.zeros((3, 3)))
    with pytest.raises(ValueError, match="does not match mask"):
        cosine_heatmap_mask(h, rect_mask(2, 2, 0, 0, 1, 1))


def test_cosine_vectors():
    assert cosine_vectors(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(
        1.0 / np.sqrt(2.0)
    )
    assert cosine_vectors(np.array([0.0, 0.0]), np.array([1.0, 0.0])) == 0.0


# -------------------------------------------------------------- job fan-out


def test_pair_jobs_default_variant():
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))       # anchors at frames 5, 1
    b = track_frames(2, list(range(10, 16)))  # anchors at frames 10, 14
    jobs = pair_jobs(a, b, cfg)
    flow = [(j.ref_tid, j.ref_frame, j.query_tid, j.query_frame) for j in jobs]
    assert flow == [
        (1, 5, 2, 10),
        (2, 10, 1, 5),
        (1, 1, 2, 14),
        (2, 14, 1, 1),
    ]
    assert jobs[0].ref_mask == a.detections[5].mask
    assert jobs[0].query_mask == b.detections[0].mask


def test_pair_jobs_truncates_to_shorter_side():
    cfg = PipelineConfig(ref_variant=RefVariant.FRAMES125)
    a = track_frames(1, [0, 1, 2])            # far anchor out of range: 2 anchors
    b = track_frames(2, list(range(10, 16)))  # 3 anchors
    jobs = pair_jobs(a, b, cfg)
    flow = [(j.ref_tid, j.ref_frame, j.query_tid, j.query_frame) for j in jobs]
    assert flow == [
        (1, 2, 2, 10),
        (2, 10, 1, 2),
        (1, 1, 2, 11),
        (2, 11, 1, 1),
    ]


# ------------------------------------------------------------ stm backend


def full_table(a, b, cfg, make_values):
    table = {}
    for job in pair_jobs(a, b, cfg):
        key = (job.ref_tid, job.ref_frame, job.query_frame)
        table[key] = Heatmap(width=W, height=H, values=make_values(job))
    return table


def test_sim_stm_perfect_propagation():
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))
    b = track_frames(2, list(range(10, 16)))
    provider = DictProvider(
        full_table(a, b, cfg, lambda j: j.query_mask.to_array().astype(float))
    )
    assert sim_stm(a, b, provider, cfg) == pytest.approx(1.0)
    assert len(provider.calls) == 4


def test_sim_stm_uniform_heatmap_value():
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))
    b = track_frames(2, list(range(10, 16)))
    provider = DictProvider(
        full_table(a, b, cfg, lambda j: np.full((H, W), 0.5))
    )
    # |0.5 * ones(16)| = 2, |4-pixel mask| = 2, dot = 2  ->  cosine 0.5
    assert sim_stm(a, b, provider, cfg) == pytest.approx(0.5)


def test_sim_stm_miss_returns_none(caplog):
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))
    b = track_frames(2, list(range(10, 16)))
    table = full_table(a, b, cfg, lambda j: j.query_mask.to_array().astype(float))
    del table[(2, 14, 1)]
    with caplog.at_level("WARNING", logger="masklink.similarity"):
        assert sim_stm(a, b, DictProvider(table), cfg) is None
    assert "heatmap missing" in caplog.text


# ------------------------------------------------------------ rgb backend


def solid(r, g, b):
    img = np.zeros((H, W, 3), dtype=np.uint8)
    img[:] = (r, g, b)
    return img


def test_sim_rgb_matching_colors():
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    images = {f: solid(200, 30, 30) for f in (0, 1, 5, 6)}
    assert sim_rgb(a, b, images, cfg, all_frames=False) == pytest.approx(1.0)


def test_sim_rgb_disjoint_colors():
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    images = {0: solid(200, 30, 30), 1: solid(200, 30, 30),
              5: solid(30, 30, 200), 6: solid(30, 30, 200)}
    assert sim_rgb(a, b, images, cfg, all_frames=False) == pytest.approx(0.0)


def test_sim_rgb_missing_image(caplog):
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    images = [solid(200, 30, 30), solid(200, 30, 30)]  # frames 5, 6 absent
    with caplog.at_level("WARNING", logger="masklink.similarity"):
        assert sim_rgb(a, b, images, cfg, all_frames=False) is None
    assert "image missing" in caplog.text


def test_sim_rgb_populates_cache():
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    images = {f: solid(200, 30, 30) for f in (0, 1, 5, 6)}
    cache = {}
    sim_rgb(a, b, images, cfg, all_frames=False, cache=cache)
    assert set(cache) == {(1, 0), (1, 1), (2, 5), (2, 6)}


# ----------------------------------------------------------- reid backend


class DictFeatures:
    def __init__(self, table):
        self.table = table

    def get(self, tid, frame):
        return self.table.get((tid, frame))


def test_sim_reid_identical_vectors():
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    vec = np.array([0.6, 0.8])
    feats = DictFeatures({(1, 0): vec, (1, 1): vec, (2, 5): vec, (2, 6): vec})
    assert sim_reid(a, b, feats, cfg, all_frames=True) == pytest.approx(1.0)


def test_sim_reid_orthogonal_vectors():
    cfg = PipelineConfig()
    a = track_frames(1, [0, 1])
    b = track_frames(2, [5, 6])
    ex, ey = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    feats = DictFeatures({(1, 0): ex, (1, 1): ex, (2, 5): ey, (2, 6): ey})
    assert sim_reid(a, b, feats, cfg, all_frames=True) == pytest.approx(0.0)


def test_sim_reid_anchor_mode_needs_only_anchor_frames(caplog):
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))       # anchors 5, 1
    b = track_frames(2, list(range(10, 16)))  # anchors 10, 14
    vec = np.array([1.0, 2.0])
    feats = DictFeatures({(1, 5): vec, (1, 1): vec, (2, 10): vec, (2, 14): vec})
    assert sim_reid(a, b, feats, cfg, all_frames=False) == pytest.approx(1.0)
    with caplog.at_level("WARNING", logger="masklink.similarity"):
        assert sim_reid(a, b, feats, cfg, all_frames=True) is None
    assert "feature missing" in caplog.text


# ------------------------------------------------------------ construction


def test_make_backend_requires_matching_source():
    base = PipelineConfig()
    with pytest.raises(ValueError, match="heatmap source"):
        make_backend(base)
    with pytest.raises(ValueError, match="sequence images"):
        make_backend(base.replace(backend=Backend.RGB_2X2))
    with pytest.raises(ValueError, match="feature table"):
        make_backend(base.replace(backend=Backend.REID_NXP))
    with pytest.raises(ValueError, match="does not define"):
        make_backend(base.replace(backend=Backend.ORACLE))


def test_make_backend_binds_sources():
    cfg = PipelineConfig()
    a = track_frames(1, list(range(6)))
    b = track_frames(2, list(range(10, 16)))
    provider = DictProvider(
        full_table(a, b, cfg, lambda j: j.query_mask.to_array().astype(float))
    )
    fn = make_backend(cfg, provider=provider)
    assert fn(a, b) == pytest.approx(1.0)

    rgb = make_backend(cfg.replace(backend=Backend.RGB_2X2), images={})
    assert callable(rgb)
