"""Compact text form of column-major run-length masks.

The packing, bit for bit:

* Runs alternate background/foreground over column-major pixel order,
  starting with a (possibly zero) background run.
* Every run length from the fourth on is stored as a delta against the
  run two places before it (same polarity), so deltas may be negative.
* Each number is split into 5-bit groups, least significant first.  A group
  gets bit 0x20 added when more groups follow.  Emission stops once the
  remaining value is 0 (or -1 for negatives) AND the sign bit (0x10) of the
  last emitted group already matches, mirroring two's-complement sign
  extension on decode.
* Each 6-bit group is shifted up by 48, so the alphabet is the 64
  consecutive ASCII characters from '0' (48) to 'o' (111).

docs/formats.md in the repository root carries worked examples.
"""

from __future__ import annotations

from ..model import BinaryMask

_CHAR_BASE = 48
_ALPHABET_SIZE = 64


def encode_counts(counts: list[int] | tuple[int, ...]) -> str:
    """Pack run lengths into the 6-bit character string."""
    chars = []
    for i, count in enumerate(counts):
        if count < 0:
            raise ValueError("run lengths must be non-negative")
        x = count - counts[i - 2] if i > 2 else count
        more = True
        while more:
            group = x & 0x1F
            x >>= 5
            more = (x != -1) if (group & 0x10) else (x != 0)
            if more:
                group |= 0x20
            chars.append(group + _CHAR_BASE)
    return "".join(chr(c) for c in chars)


def decode_counts(s: str) -> list[int]:
    """Unpack the 6-bit character string into run lengths."""
    counts: list[int] = []
    p = 0
    while p < len(s):
        x = 0
        k = 0
        more = True
        while more:
            if p >= len(s):
                raise ValueError("truncated run-length string")
            group = ord(s[p]) - _CHAR_BASE
            if not 0 <= group < _ALPHABET_SIZE:
                raise ValueError(f"invalid run-length character {s[p]!r}")
            x |= (group & 0x1F) << (5 * k)
            more = bool(group & 0x20)
            p += 1
            k += 1
            if not more and (group & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        if x < 0:
            raise ValueError("negative run length after delta reconstruction")
        counts.append(x)
    return counts


def mask_to_string(mask: BinaryMask) -> str:
    return encode_counts(mask.runs)


def mask_from_string(s: str, height: int, width: int) -> BinaryMask:
    counts = decode_counts(s)
    if not counts:
        raise ValueError("empty run-length string")
    return BinaryMask(width=width, height=height, runs=tuple(counts))
