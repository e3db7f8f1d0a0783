"""Shared helpers: tiny scenes written straight to disk as P6 frames."""

import json

import numpy as np

BG = (20, 20, 24)


def write_ppm(path, array):
    height, width = array.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode()
    path.write_bytes(header + np.ascontiguousarray(array, dtype=np.uint8).tobytes())


def solid_frame(height, width, color=BG):
    frame = np.zeros((height, width, 3), dtype=np.uint8)
    frame[:] = color
    return frame


def paint_rect(frame, y, x, h, w, color):
    frame[y:y + h, x:x + w] = color
    return frame


def write_frames(seq_dir, frames):
    images = seq_dir / "images"
    images.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_ppm(images / f"{i:06d}.ppm", frame)
    return seq_dir


def mask_to_runs(mask):
    """Column-major alternating runs, starting with background."""
    flat = np.asarray(mask, dtype=bool).T.reshape(-1)
    runs = [0]
    current = False
    for value in flat:
        if value == current:
            runs[-1] += 1
        else:
            runs.append(1)
            current = value
    return runs


def manifest_doc(width, height, tracklets=(), pairs=()):
    return {
        "sequence_id": "scene",
        "width": width,
        "height": height,
        "fps": 10.0,
        "tracklets": list(tracklets),
        "pairs": list(pairs),
    }


def write_manifest(path, doc):
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path
