"""Mask tracking text files.

Result and ground-truth files carry one mask per line:

    frame track_id class_id img_height img_width rle

Ground-truth ids additionally encode the class as track_id // 1000.
Detection files append a confidence column:

    frame det_index class_id img_height img_width rle score

Frames are 0-based.  Fields are separated by single spaces; writers are
canonical, so write(read(file)) reproduces the file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..model import BinaryMask, Detection, Tracklet
from .rle_string import mask_from_string, mask_to_string

GT_ID_CLASS_BASE = 1000


@dataclass(frozen=True)
class MotsLine:
    frame: int
    track_id: int
    class_id: int
    img_h: int
    img_w: int
    rle: str
    score: float | None = None

    def serialize(self) -> str:
        base = f"{self.frame} {self.track_id} {self.class_id} {self.img_h} {self.img_w} {self.rle}"
        if self.score is None:
            return base
        return f"{base} {self.score}"


def _parse_line(raw: str, lineno: int, with_score: bool) -> MotsLine:
    fields = raw.split(" ")
    want = 7 if with_score else 6
    if len(fields) != want or any(f == "" for f in fields):
        raise ValueError(f"line {lineno}: expected {want} space-separated fields")
    try:
        frame = int(fields[0])
        track_id = int(fields[1])
        class_id = int(fields[2])
        img_h = int(fields[3])
        img_w = int(fields[4])
    except ValueError as err:
        raise ValueError(f"line {lineno}: {err}") from None
    score = None
    if with_score:
        try:
            score = float(fields[6])
        except ValueError:
            raise ValueError(f"line {lineno}: bad score field {fields[6]!r}") from None
    if frame < 0:
        raise ValueError(f"line {lineno}: negative frame index")
    if img_h <= 0 or img_w <= 0:
        raise ValueError(f"line {lineno}: non-positive image dimensions")
    return MotsLine(
        frame=frame, track_id=track_id, class_id=class_id,
        img_h=img_h, img_w=img_w, rle=fields[5], score=score,
    )


def _read_lines(path: str | Path, with_score: bool) -> list[tuple[MotsLine, BinaryMask]]:
    out = []
    dims: tuple[int, int] | None = None
    with open(path, "r", encoding="ascii") as handle:
        for lineno, raw in enumerate(handle.read().splitlines(), start=1):
            line = _parse_line(raw, lineno, with_score)
            if dims is None:
                dims = (line.img_h, line.img_w)
            elif dims != (line.img_h, line.img_w):
                raise ValueError(
                    f"line {lineno}: image dimensions {line.img_h}x{line.img_w} "
                    f"disagree with {dims[0]}x{dims[1]}"
                )
            try:
                mask = mask_from_string(line.rle, line.img_h, line.img_w)
            except ValueError as err:
                raise ValueError(f"line {lineno}: {err}") from None
            out.append((line, mask))
    return out


def _check_disjoint(entries: Sequence[tuple[MotsLine, BinaryMask]]) -> None:
    by_frame: dict[int, list[BinaryMask]] = {}
    for line, mask in entries:
        by_frame.setdefault(line.frame, []).append(mask)
    for frame in sorted(by_frame):
        union = None
        for mask in by_frame[frame]:
            dense = mask.to_array()
            if union is None:
                union = dense.copy()
            elif (union & dense).any():
                raise ValueError(f"frame {frame}: overlapping masks")
            else:
                union |= dense


def _tracks_from_entries(
    entries: Sequence[tuple[MotsLine, BinaryMask]], default_score: float
) -> list[Tracklet]:
    _check_disjoint(entries)
    order: list[int] = []
    grouped: dict[int, list[tuple[MotsLine, BinaryMask]]] = {}
    for line, mask in entries:
        if line.track_id not in grouped:
            grouped[line.track_id] = []
            order.append(line.track_id)
        grouped[line.track_id].append((line, mask))
    tracks = []
    for tid in order:
        rows = sorted(grouped[tid], key=lambda r: r[0].frame)
        frames = [r[0].frame for r in rows]
        if len(set(frames)) != len(frames):
            dup = next(f for i, f in enumerate(frames) if f in frames[:i])
            raise ValueError(f"track {tid}: duplicate mask for frame {dup}")
        classes = {r[0].class_id for r in rows}
        if len(classes) != 1:
            raise ValueError(f"track {tid}: inconsistent class ids {sorted(classes)}")
        dets = tuple(
            Detection(frame=line.frame, class_id=line.class_id, score=default_score, mask=mask)
            for line, mask in rows
        )
        tracks.append(Tracklet(id=tid, class_id=rows[0][0].class_id, detections=dets))
    return tracks


def read_result(path: str | Path) -> list[Tracklet]:
    """Read a result file into tracks (scores are not stored; 1.0 is used)."""
    return _tracks_from_entries(_read_lines(path, with_score=False), default_score=1.0)


def read_gt(path: str | Path) -> list[Tracklet]:
    """Read a ground-truth file, checking the id/class encoding."""
    entries = _read_lines(path, with_score=False)
    for line, _ in entries:
        if line.track_id // GT_ID_CLASS_BASE != line.class_id:
            raise ValueError(
                f"ground-truth id {line.track_id} does not encode class {line.class_id}"
            )
    return _tracks_from_entries(entries, default_score=1.0)


def read_detections(path: str | Path) -> list[Detection]:
    """Read a detection file; entries keep file order."""
    entries = _read_lines(path, with_score=True)
    _check_disjoint(entries)
    return [
        Detection(frame=line.frame, class_id=line.class_id, score=line.score, mask=mask)
        for line, mask in entries
    ]


def _write_lines(lines: Sequence[MotsLine], path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as handle:
        for line in lines:
            handle.write(line.serialize())
            handle.write("\n")


def track_lines(tracks: Sequence[Tracklet]) -> list[MotsLine]:
    out = []
    for t in tracks:
        for det in t.detections:
            out.append(
                MotsLine(
                    frame=det.frame, track_id=t.id, class_id=t.class_id,
                    img_h=det.mask.height, img_w=det.mask.width,
                    rle=mask_to_string(det.mask),
                )
            )
    out.sort(key=lambda l: (l.frame, l.track_id))
    return out


def write_result(tracks: Sequence[Tracklet], path: str | Path) -> None:
    _write_lines(track_lines(tracks), path)


def write_gt(tracks: Sequence[Tracklet], path: str | Path) -> None:
    for t in tracks:
        if t.id // GT_ID_CLASS_BASE != t.class_id:
            raise ValueError(f"ground-truth id {t.id} does not encode class {t.class_id}")
    _write_lines(track_lines(tracks), path)


def write_detections(detections: Sequence[Detection], path: str | Path) -> None:
    """Write detections, one line each, numbered within their frame."""
    per_frame_index: dict[int, int] = {}
    lines = []
    for det in sorted(detections, key=lambda d: d.frame):
        idx = per_frame_index.get(det.frame, 0)
        per_frame_index[det.frame] = idx + 1
        lines.append(
            MotsLine(
                frame=det.frame, track_id=idx, class_id=det.class_id,
                img_h=det.mask.height, img_w=det.mask.width,
                rle=mask_to_string(det.mask), score=det.score,
            )
        )
    _write_lines(lines, path)
