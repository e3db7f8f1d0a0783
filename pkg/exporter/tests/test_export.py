"""Operation-level behavior, driven through the API and the CLI."""

import logging
import struct

import numpy as np
import pytest

from conftest import (
    manifest_doc,
    mask_to_runs,
    paint_rect,
    solid_frame,
    write_frames,
    write_manifest,
)
from maskexport import export
from maskexport.cli import main
from maskexport.formats import decode_rle


def moving_scene(tmp_path, count=4, shift=2):
    frames = []
    for t in range(count):
        frames.append(paint_rect(solid_frame(40, 48), 10, 8 + shift * t, 10, 12,
                                 (200, 60, 60)))
    return write_frames(tmp_path / "seq", frames)


def rect_runs(y, x, h, w):
    mask = np.zeros((40, 48), bool)
    mask[y:y + h, x:x + w] = True
    return mask_to_runs(mask), mask


# ----------------------------------------------------------------- flow


def test_two_frames_one_flow_file(tmp_path):
    seq = moving_scene(tmp_path, count=2)
    out = tmp_path / "flows"
    assert export.export_flow(seq, out) == 1
    assert sorted(p.name for p in out.iterdir()) == ["000000.flo"]


def test_flow_needs_two_frames(tmp_path):
    seq = moving_scene(tmp_path, count=1)
    with pytest.raises(ValueError, match="at least 2 frames"):
        export.export_flow(seq, tmp_path / "flows")


def test_flow_refuses_gappy_sequences(tmp_path):
    seq = moving_scene(tmp_path, count=3)
    (seq / "images" / "000001.ppm").unlink()
    with pytest.raises(ValueError, match="missing frame 000001"):
        export.export_flow(seq, tmp_path / "flows")


def test_static_clip_flow_is_near_zero(tmp_path):
    seq = write_frames(tmp_path / "seq", [solid_frame(24, 32)] * 3)
    out = tmp_path / "flows"
    assert export.export_flow(seq, out) == 2
    data = (out / "000001.flo").read_bytes()
    width, height = struct.unpack_from("<ii", data, 4)
    vectors = np.frombuffer(data, "<f4", offset=12).reshape(height, width, 2)
    assert float(np.median(np.hypot(vectors[..., 0], vectors[..., 1]))) < 0.5


# ------------------------------------------------------------- heatmaps


def test_empty_manifest_yields_valid_empty_container(tmp_path):
    manifest = write_manifest(tmp_path / "m.json", manifest_doc(48, 40))
    out = tmp_path / "h.bin"
    assert export.export_heatmaps(tmp_path / "nowhere", manifest, out) == 0
    magic, width, height, count = struct.unpack("<4sIII", out.read_bytes())
    assert (magic, width, height, count) == (b"HMC1", 48, 40, 0)


def test_one_pair_four_heatmaps(tmp_path):
    seq = moving_scene(tmp_path)
    runs, _ = rect_runs(10, 8, 10, 12)
    runs_late, _ = rect_runs(10, 14, 10, 12)
    jobs = [
        {"ref_tid": 1, "ref_frame": 1, "ref_runs": runs,
         "query_tid": 2, "query_frame": 2},
        {"ref_tid": 2, "ref_frame": 2, "ref_runs": runs_late,
         "query_tid": 1, "query_frame": 1},
        {"ref_tid": 1, "ref_frame": 0, "ref_runs": runs,
         "query_tid": 2, "query_frame": 3},
        {"ref_tid": 2, "ref_frame": 3, "ref_runs": runs_late,
         "query_tid": 1, "query_frame": 0},
    ]
    manifest = write_manifest(
        tmp_path / "m.json",
        manifest_doc(48, 40, pairs=[{"a": 1, "b": 2, "jobs": jobs}]),
    )
    out = tmp_path / "h.bin"
    assert export.export_heatmaps(seq, manifest, out) == 4
    data = out.read_bytes()
    assert struct.unpack_from("<III", data, 4)[2] == 4
    keys = {struct.unpack_from("<iiiQ", data, 16 + 20 * i)[:3] for i in range(4)}
    assert keys == {(1, 1, 2), (2, 2, 1), (1, 0, 3), (2, 3, 0)}


def test_heatmaps_check_frame_range(tmp_path):
    seq = moving_scene(tmp_path, count=2)
    runs, _ = rect_runs(10, 8, 10, 12)
    jobs = [{"ref_tid": 1, "ref_frame": 0, "ref_runs": runs,
             "query_tid": 2, "query_frame": 9}]
    manifest = write_manifest(
        tmp_path / "m.json",
        manifest_doc(48, 40, pairs=[{"a": 1, "b": 2, "jobs": jobs}]),
    )
    with pytest.raises(ValueError, match="references frame 9"):
        export.export_heatmaps(seq, manifest, tmp_path / "h.bin")


# ------------------------------------------------------------- features


def test_reid_from_detections(tmp_path):
    seq = moving_scene(tmp_path, count=2)
    runs, _ = rect_runs(10, 8, 10, 12)
    rle = encode_for_test(runs)
    assert decode_rle(rle) == runs  # fixture self-check
    det_file = tmp_path / "det.txt"
    det_file.write_text(f"0 0 1 40 48 {rle} 0.9\n")
    out = tmp_path / "r.bin"
    assert export.export_reid(seq, out, detections_path=det_file) == 1
    data = out.read_bytes()
    assert struct.unpack_from("<4sII", data, 0) == (b"RFT1", 64, 1)
    assert struct.unpack_from("<ii", data, 12) == (0, 0)


def test_reid_from_manifest_keys_by_tracklet(tmp_path):
    seq = moving_scene(tmp_path, count=2)
    runs, _ = rect_runs(10, 8, 10, 12)
    doc = manifest_doc(
        48, 40,
        tracklets=[{"id": 7, "class_id": 1,
                    "detections": [{"frame": 0, "score": 0.9, "runs": runs},
                                   {"frame": 1, "score": 0.8, "runs": runs}]}],
    )
    manifest = write_manifest(tmp_path / "m.json", doc)
    out = tmp_path / "r.bin"
    assert export.export_reid(seq, out, manifest_path=manifest) == 2
    data = out.read_bytes()
    assert struct.unpack_from("<ii", data, 12) == (7, 0)


def test_reid_empty_table(tmp_path):
    det_file = tmp_path / "det.txt"
    det_file.write_text("")
    out = tmp_path / "r.bin"
    assert export.export_reid(tmp_path / "nowhere", out, detections_path=det_file) == 0
    assert struct.unpack("<4sII", out.read_bytes()) == (b"RFT1", 64, 0)


def test_reid_requires_exactly_one_source(tmp_path):
    with pytest.raises(ValueError, match="exactly one"):
        export.export_reid(tmp_path, tmp_path / "r.bin")
    with pytest.raises(ValueError, match="exactly one"):
        export.export_reid(tmp_path, tmp_path / "r.bin",
                           manifest_path="m", detections_path="d")


# ------------------------------------------------------------------ cli


def test_cli_flow_and_errors(tmp_path, caplog):
    seq = moving_scene(tmp_path, count=3)
    assert main(["flow", "--seq", str(seq), "--out", str(tmp_path / "f")]) == 0
    assert sorted(p.name for p in (tmp_path / "f").iterdir()) == [
        "000000.flo", "000001.flo",
    ]
    with caplog.at_level(logging.ERROR, logger="maskexport.cli"):
        assert main(["flow", "--seq", str(tmp_path / "missing"),
                     "--out", str(tmp_path / "f2")]) == 1
    assert "images/" in caplog.text


def test_cli_torch_engine_fails_actionably(tmp_path, caplog):
    seq = moving_scene(tmp_path, count=2)
    with caplog.at_level(logging.ERROR, logger="maskexport.cli"):
        rc = main(["flow", "--seq", str(seq), "--out", str(tmp_path / "f"),
                   "--engine", "torch"])
    assert rc == 1
    assert "--engine classic" in caplog.text


def test_cli_heatmaps_and_reid(tmp_path):
    seq = moving_scene(tmp_path, count=2)
    manifest = write_manifest(tmp_path / "m.json", manifest_doc(48, 40))
    assert main(["heatmaps", "--seq", str(seq), "--manifest", str(manifest),
                 "--out", str(tmp_path / "h.bin")]) == 0
    det_file = tmp_path / "det.txt"
    det_file.write_text("")
    assert main(["reid", "--seq", str(seq), "--detections", str(det_file),
                 "--out", str(tmp_path / "r.bin")]) == 0


# ---------------------------------------------------------------- utils


def encode_for_test(counts):
    """Inverse of formats.decode_rle, for building fixture lines."""
    chars = []
    for i, count in enumerate(counts):
        value = count - counts[i - 2] if i > 2 else count
        more = True
        while more:
            group = value & 0x1F
            value >>= 5
            more = (value != -1) if (group & 0x10) else (value != 0)
            if more:
                group |= 0x20
            chars.append(chr(group + 48))
    return "".join(chars)
