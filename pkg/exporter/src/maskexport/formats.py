"""Readers and writers for the exchange formats.

Implemented from the format notes shipped with the tracking package
(docs/formats.md there); layouts are frozen, so nothing here imports it.
All binary values are little-endian.
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np

FLO_MAGIC = 202021.25
HEAT_MAGIC = b"HMC1"
HEAT_HEADER = struct.Struct("<4sIII")
HEAT_ENTRY = struct.Struct("<iiiQ")
REID_MAGIC = b"RFT1"
REID_HEADER = struct.Struct("<4sII")
REID_ENTRY = struct.Struct("<ii")

MANIFEST_KEYS = ("sequence_id", "width", "height", "fps", "tracklets", "pairs")

_FRAME_FILE = re.compile(r"^(\d{6})\.(flo|ppm)$")


# ----------------------------------------------------------------- flow


def write_flo(vectors: np.ndarray, path: str | Path) -> None:
    """One dense (height, width, 2) flow field, (u, v) = (dx, dy)."""
    v = np.ascontiguousarray(vectors, dtype="<f4")
    if v.ndim != 3 or v.shape[2] != 2:
        raise ValueError(f"flow must be HxWx2, got {v.shape}")
    height, width = v.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLO_MAGIC, width, height))
        fh.write(v.tobytes())


# ------------------------------------------------------------- heatmaps


def quantize(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats to uint8, round-half-up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def write_heatmaps(
    entries: dict[tuple[int, int, int], np.ndarray],
    width: int,
    height: int,
    path: str | Path,
) -> None:
    """Container of (ref_track, ref_frame, query_frame) -> heatmap.

    Entries are laid out in sorted key order so identical inputs give
    identical bytes.  Float arrays are quantized; uint8 passes through.
    """
    keys = sorted(entries)
    payloads = []
    for key in keys:
        grid = entries[key]
        if grid.shape != (height, width):
            raise ValueError(
                f"heatmap {key} is {grid.shape}, container is {height}x{width}"
            )
        payloads.append(
            grid.tobytes() if grid.dtype == np.uint8 else quantize(grid).tobytes()
        )
    offset = HEAT_HEADER.size + HEAT_ENTRY.size * len(keys)
    with open(path, "wb") as fh:
        fh.write(HEAT_HEADER.pack(HEAT_MAGIC, width, height, len(keys)))
        for key, payload in zip(keys, payloads):
            fh.write(HEAT_ENTRY.pack(key[0], key[1], key[2], offset))
            offset += len(payload)
        for payload in payloads:
            fh.write(payload)


# ------------------------------------------------------------- features


def write_reid(
    entries: dict[tuple[int, int], np.ndarray], dim: int, path: str | Path
) -> None:
    """Feature table of (track_or_index, frame) -> float32 vector."""
    with open(path, "wb") as fh:
        fh.write(REID_HEADER.pack(REID_MAGIC, dim, len(entries)))
        for key in sorted(entries):
            vec = np.ascontiguousarray(entries[key], dtype="<f4")
            if vec.shape != (dim,):
                raise ValueError(f"feature {key} has shape {vec.shape}, want ({dim},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"feature {key} contains non-finite values")
            fh.write(REID_ENTRY.pack(*key))
            fh.write(vec.tobytes())


# --------------------------------------------------------------- images


def read_ppm(path: str | Path) -> np.ndarray:
    """Binary P6 image to a (height, width, 3) uint8 array."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary P6 file")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        elif ch.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise ValueError(f"{path}: unexpected byte {ch!r} in header")
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ValueError(f"{path}: missing whitespace after maxval")
    pos += 1
    need = width * height * 3
    raw = data[pos : pos + need]
    if len(raw) != need:
        raise ValueError(f"{path}: expected {need} sample bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)


def read_image_dir(seq_dir: str | Path) -> list[np.ndarray]:
    """All frames of seq/images, checked to be contiguous from 000000."""
    images_dir = Path(seq_dir) / "images"
    if not images_dir.is_dir():
        raise ValueError(f"{seq_dir}: no images/ directory")
    numbered = {}
    for entry in images_dir.iterdir():
        m = _FRAME_FILE.match(entry.name)
        if m and m.group(2) == "ppm":
            numbered[int(m.group(1))] = entry
    if not numbered:
        raise ValueError(f"{images_dir}: no frame images found")
    count = max(numbered) + 1
    missing = [i for i in range(count) if i not in numbered]
    if missing:
        raise ValueError(f"{images_dir}: missing frame {missing[0]:06d}.ppm")
    return [read_ppm(numbered[i]) for i in range(count)]


# ------------------------------------------------- masks and detections


def decode_rle(s: str) -> list[int]:
    """Column-major run lengths from the 6-bit delta string."""
    counts: list[int] = []
    pos = 0
    while pos < len(s):
        value = 0
        shift = 0
        more = True
        while more:
            if pos >= len(s):
                raise ValueError("truncated run-length string")
            group = ord(s[pos]) - 48
            if not 0 <= group < 64:
                raise ValueError(f"invalid run-length character {s[pos]!r}")
            value |= (group & 0x1F) << shift
            more = bool(group & 0x20)
            pos += 1
            shift += 5
            if not more and (group & 0x10):
                value |= -1 << shift
        if len(counts) > 2:
            value += counts[-2]
        if value < 0:
            raise ValueError("negative run length")
        counts.append(value)
    return counts


def runs_to_mask(runs: list[int], height: int, width: int) -> np.ndarray:
    """Alternating background/foreground runs to a (height, width) bool grid."""
    if sum(runs) != width * height:
        raise ValueError(f"runs cover {sum(runs)} pixels, grid has {width * height}")
    flat = np.zeros(width * height, dtype=bool)
    at = 0
    for i, run in enumerate(runs):
        if i % 2:
            flat[at : at + run] = True
        at += run
    return flat.reshape(width, height).T  # column-major order


def read_detections(path: str | Path):
    """Detection lines as (frame, index, class_id, height, width, runs, score)."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 columns, got {len(parts)}")
        frame, index, class_id, height, width = (int(p) for p in parts[:5])
        rows.append(
            (frame, index, class_id, height, width, decode_rle(parts[5]), float(parts[6]))
        )
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


# ------------------------------------------------------------- manifest


def read_manifest(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in MANIFEST_KEYS:
        if key not in doc:
            raise ValueError(f"{path}: manifest is missing {key!r}")
    return doc
