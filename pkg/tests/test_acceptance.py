"""Acceptance gate: one test per release criterion.

Each criterion is a single test function, so `pytest -v` prints exactly one
pass/fail line per criterion; with -s each test also prints a PASS line with
the measured numbers.  Tolerances are stated inline next to each assertion.
"""

import itertools
import time

import numpy as np
import pytest

from conftest import det, rect_mask, tracklet
from masklink import synth
from masklink.assignment import hungarian_min
from masklink.cli import main
from masklink.lta import spatial_cost, temporal_cost
from masklink.maskops import FlowField, mask_area, mask_centroid, mask_iou, warp_mask
from masklink.metrics import evaluate
from masklink.model import BinaryMask, PipelineConfig, filter_detections
from masklink.oracles import oracle_lta, oracle_slta
from masklink.pipeline import run_pipeline
from masklink.similarity import make_backend
from masklink.sta import build_tracklets


def _passed(name: str, detail: str) -> None:
    print(f"PASS {name}: {detail}")


# ------------------------------------------------------------------ A1


def _min_total_by_enumeration(cost: np.ndarray, perm_cache: dict) -> float:
    """Cheapest injective assignment, found by trying every permutation."""
    rows, cols = cost.shape
    if rows <= cols:
        key = (rows, cols)
        if key not in perm_cache:
            perm_cache[key] = np.array(
                list(itertools.permutations(range(cols), rows)), dtype=np.int64
            )
        perms = perm_cache[key]
        totals = cost[np.arange(rows)[None, :], perms].sum(axis=1)
    else:
        key = (cols, rows)
        if key not in perm_cache:
            perm_cache[key] = np.array(
                list(itertools.permutations(range(rows), cols)), dtype=np.int64
            )
        perms = perm_cache[key]
        totals = cost[perms, np.arange(cols)[None, :]].sum(axis=1)
    return float(totals.min())


def test_criterion_assignment_optimality():
    # 1000 random integer-valued matrices up to 7x7: the solver total must
    # equal exhaustive permutation search exactly, in under 5 seconds.
    rng = np.random.default_rng(11)
    cache: dict = {}
    start = time.perf_counter()
    for _ in range(1000):
        rows = int(rng.integers(1, 8))
        cols = int(rng.integers(1, 8))
        cost = rng.integers(0, 1_000_000, size=(rows, cols)).astype(np.float64)
        result = hungarian_min(cost)
        total = float(sum(cost[r, c] for r, c in result.pairs))
        assert len(result.pairs) == min(rows, cols)
        assert total == _min_total_by_enumeration(cost, cache)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    _passed("assignment-optimality", f"1000 matrices exact in {elapsed:.2f}s")


# ------------------------------------------------------------------ A2


def _warp_by_pixel(arr: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Move every set pixel one at a time; the reference for warp_mask."""
    height, width = arr.shape
    out = np.zeros_like(arr)
    for y in range(height):
        for x in range(width):
            if arr[y, x]:
                tx = x + int(np.rint(vectors[y, x, 0]))
                ty = y + int(np.rint(vectors[y, x, 1]))
                if 0 <= tx < width and 0 <= ty < height:
                    out[ty, tx] = True
    return out


def test_criterion_mask_oracle_equivalence():
    # 500 random mask pairs up to 64x64: iou, area, centroid and warp must
    # match a per-pixel reference exactly (no tolerance).
    rng = np.random.default_rng(12)
    for _ in range(500):
        height = int(rng.integers(1, 65))
        width = int(rng.integers(1, 65))
        arr_a = rng.random((height, width)) < 0.3
        arr_b = rng.random((height, width)) < 0.3
        mask_a = BinaryMask.from_array(arr_a)
        mask_b = BinaryMask.from_array(arr_b)

        inter = int(np.count_nonzero(arr_a & arr_b))
        union = int(np.count_nonzero(arr_a | arr_b))
        expected_iou = 0.0 if union == 0 else inter / union
        assert mask_iou(mask_a, mask_b) == expected_iou

        assert mask_area(mask_a) == int(arr_a.sum())
        assert mask_area(mask_b) == int(arr_b.sum())

        if arr_a.any():
            sum_x = sum_y = count = 0
            for y in range(height):
                for x in range(width):
                    if arr_a[y, x]:
                        sum_x += x
                        sum_y += y
                        count += 1
            assert mask_centroid(mask_a) == (sum_x / count, sum_y / count)
        else:
            with pytest.raises(ValueError):
                mask_centroid(mask_a)

        flow = FlowField(width, height, rng.normal(0.0, 3.0, (height, width, 2)))
        warped = warp_mask(mask_a, flow).to_array()
        assert np.array_equal(warped, _warp_by_pixel(arr_a, flow.vectors))
    _passed("mask-oracle-equivalence", "500 random grids, all four ops exact")


# ------------------------------------------------------------------ A3


def test_criterion_metric_fixtures():
    shape = rect_mask(10, 20, 2, 2, 5, 5)
    other = rect_mask(10, 20, 12, 2, 5, 5)

    gt = [tracklet(1, [det(f, shape) for f in range(4)]),
          tracklet(2, [det(f, other) for f in range(4)])]
    perfect = evaluate(
        [tracklet(7, [det(f, shape) for f in range(4)]),
         tracklet(8, [det(f, other) for f in range(4)])], gt)
    for value in (perfect.hota, perfect.deta, perfect.assa, perfect.smotsa,
                  perfect.motsa, perfect.idf1):
        assert value == pytest.approx(1.0, abs=1e-9)
    assert perfect.idsw == 0

    split_gt = [tracklet(1, [det(f, shape) for f in range(4)])]
    split = evaluate(
        [tracklet(1, [det(0, shape), det(1, shape)]),
         tracklet(2, [det(2, shape), det(3, shape)])], split_gt)
    assert split.hota == pytest.approx(np.sqrt(0.5), abs=1e-9)
    assert split.idsw == 1

    nothing = evaluate([], gt)
    for value in (nothing.hota, nothing.deta, nothing.assa, nothing.smotsa,
                  nothing.motsa, nothing.idf1):
        assert value == 0.0
    _passed("metric-fixtures", "perfect=1, split=sqrt(0.5) with 1 switch, empty=0")


# ---------------------------------------------------------- A4 helpers


def _run_generated(gen, cfg: PipelineConfig, *, disable_lta: bool = False):
    similarity = None if disable_lta else make_backend(cfg, provider=gen.ideal_provider())
    result = run_pipeline(
        gen.detections, list(gen.flows), cfg, gen.meta,
        similarity=similarity, gt_tracks=gen.gt_tracks, disable_lta=disable_lta,
    )
    return evaluate(result.tracks, gen.gt_tracks), result


# ------------------------------------------------------------------ A4


def test_criterion_synthetic_recovery():
    # Every recoverable scenario must come back perfect with ideal
    # propagation, merging must be what makes the association score perfect,
    # and the whole criterion must finish inside 60 seconds.
    cfg = PipelineConfig()
    start = time.perf_counter()
    for name in synth.RECOVERABLE_SCENARIOS:
        gen = synth.generate(synth.builtin_scenario(name))
        full, _ = _run_generated(gen, cfg)
        assert full.hota == 1.0, f"{name}: hota {full.hota}"
        flat, _ = _run_generated(gen, cfg, disable_lta=True)
        assert flat.assa < full.assa, f"{name}: assa did not drop"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.2f}s"
    _passed("synthetic-recovery",
            f"{len(synth.RECOVERABLE_SCENARIOS)} scenarios at HOTA 1.0, "
            f"association drops without merging, {elapsed:.1f}s")


# ------------------------------------------------------------------ A5


def test_criterion_oracle_ordering():
    cfg = PipelineConfig()
    checked = []
    for base in synth.RECOVERABLE_SCENARIOS:
        gen = synth.generate(synth.builtin_scenario(f"noisy-{base}"))
        run_report, _ = _run_generated(gen, cfg)

        filtered = [filter_detections(f, cfg, gen.meta) for f in gen.detections]
        tracklets = build_tracklets(filtered, list(gen.flows), cfg)
        lta_report = evaluate(oracle_lta(tracklets, gen.gt_tracks), gen.gt_tracks)
        slta_report = evaluate(
            oracle_slta([d for frame in filtered for d in frame], gen.gt_tracks),
            gen.gt_tracks,
        )
        assert run_report.hota <= lta_report.hota + 1e-12, base
        assert lta_report.hota <= slta_report.hota + 1e-12, base
        checked.append((base, run_report.hota, lta_report.hota, slta_report.hota))
    detail = "; ".join(f"{n} {a:.3f}<={b:.3f}<={c:.3f}" for n, a, b, c in checked)
    _passed("oracle-ordering", detail)


# ------------------------------------------------------------------ A6


def test_criterion_admissibility_gating():
    cfg = PipelineConfig()

    # A 2.0 s occlusion exceeds the 1.5 s linking window: no merge.
    gen = synth.generate(synth.builtin_scenario("long-gap"))
    assert len(gen.gt_tracks) == 1
    _, result = _run_generated(gen, cfg)
    assert result.stats.merges == 0
    assert len(result.tracks) == 2
    first, second = sorted(result.tracklets, key=lambda t: t.first_frame)
    gap = temporal_cost(first, second, gen.meta)
    assert gap == pytest.approx(2.0, abs=1e-12)
    assert gap > cfg.tau_t

    # A sideways jump lands within the time window but beyond the
    # normalized-centroid budget: still no merge.
    gen = synth.generate(synth.builtin_scenario("side-step"))
    assert len(gen.gt_tracks) == 1
    _, result = _run_generated(gen, cfg)
    assert result.stats.merges == 0
    assert len(result.tracks) == 2
    first, second = sorted(result.tracklets, key=lambda t: t.first_frame)
    assert temporal_cost(first, second, gen.meta) <= cfg.tau_t
    jump = spatial_cost(first, second, gen.meta)
    assert jump == pytest.approx(0.2143, abs=5e-5)
    assert jump > cfg.tau_s
    _passed("admissibility-gating",
            f"2.0s gap blocked, {jump:.4f} centroid jump blocked")


# ------------------------------------------------------------------ A7


def test_criterion_merge_threshold_plateau():
    gen = synth.generate(synth.builtin_scenario("sweep-two"))
    hotas = []
    for tenth in range(10):
        cfg = PipelineConfig().replace(theta_l=tenth / 10)
        report, _ = _run_generated(gen, cfg)
        hotas.append(report.hota)
    plateau = hotas[1:6]  # theta_l in [0.1, 0.5]
    assert all(value == plateau[0] for value in plateau), hotas
    assert plateau[0] == 1.0
    _passed("merge-threshold-plateau",
            "identical HOTA at theta_l 0.1..0.5 (= %.3f)" % plateau[0])


# ------------------------------------------------------------------ A8


def test_criterion_determinism(tmp_path):
    seqs = []
    for label in ("first", "second"):
        seq = tmp_path / label
        assert main(["synth", "--scenario", "noisy-convoy", "--out", str(seq),
                     "--ideal-heatmaps"]) == 0
        seqs.append(seq)
    for name in ("detections.txt", "gt.txt", "heatmaps.bin"):
        assert (seqs[0] / name).read_bytes() == (seqs[1] / name).read_bytes(), name

    outs = []
    for label in ("one", "two"):
        out = tmp_path / label
        assert main(["run", "--seq", str(seqs[0]), "--out", str(out),
                     "--heatmaps", str(seqs[0] / "heatmaps.bin")]) == 0
        outs.append(out)
    for name in ("result.txt", "stats.txt", "config.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    _passed("determinism", "sequence, heatmaps and run outputs byte-identical")
