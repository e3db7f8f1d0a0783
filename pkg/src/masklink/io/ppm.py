"""Binary PPM (P6) images, 8 bits per channel."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _read_header_tokens(data: bytes) -> tuple[list[int], int]:
    """Parse magic + three header numbers, honoring '#' comments.

    Returns the numbers and the offset of the first pixel byte.
    """
    if data[:2] != b"P6":
        raise ValueError(f"bad magic {data[:2]!r}, expected P6")
    pos = 2
    numbers: list[int] = []
    while len(numbers) < 3:
        if pos >= len(data):
            raise ValueError("truncated header")
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        elif c.isdigit():
            start = pos
            while pos < len(data) and data[pos : pos + 1].isdigit():
                pos += 1
            numbers.append(int(data[start:pos]))
        else:
            raise ValueError(f"unexpected header byte {c!r}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ValueError("missing whitespace after maxval")
    return numbers, pos + 1


def read_image(path: str | Path) -> np.ndarray:
    """Read a P6 file into a (height, width, 3) uint8 array."""
    data = Path(path).read_bytes()
    (width, height, maxval), offset = _read_header_tokens(data)
    if maxval != 255:
        raise ValueError(f"{path}: maxval {maxval} unsupported, expected 255")
    expected = width * height * 3
    payload = data[offset:]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: {len(payload)} pixel bytes, expected {expected} for {width}x{height}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape((height, width, 3)).copy()


def write_image(image: np.ndarray, path: str | Path) -> None:
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("image must be (height, width, 3) uint8")
    height, width = img.shape[:2]
    with open(path, "wb") as handle:
        handle.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        handle.write(img.tobytes(order="C"))
