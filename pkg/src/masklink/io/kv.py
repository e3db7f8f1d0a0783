"""Flat key-value text documents: pipeline configuration and sequence
metadata.

Lines look like `key = value`; blank lines and `#` comments are ignored.
Unknown keys are rejected rather than skipped.
"""

from __future__ import annotations

from pathlib import Path

from ..model import Backend, PipelineConfig, RefVariant, SequenceMeta

_CONFIG_FIELDS: dict[str, type] = {
    "theta_d": float,
    "theta_a": int,
    "theta_s": float,
    "tau_t": float,
    "tau_s": float,
    "tau_o": int,
    "n_ref": int,
    "n_ref_fallback": int,
    "theta_l": float,
    "theta_f": float,
    "ref_variant": RefVariant,
    "backend": Backend,
}

_META_FIELDS: dict[str, type] = {
    "sequence_id": str,
    "width": int,
    "height": int,
    "fps": float,
    "frame_count": int,
}


def read_kv(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValueError(f"{path}:{lineno}: empty key or value")
        if key in out:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def write_kv(pairs: dict[str, object], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in pairs.items():
            handle.write(f"{key} = {value}\n")


def _convert(key: str, value: str, kind: type, origin: str):
    try:
        if kind is str:
            return value
        if kind in (int, float):
            return kind(value)
        return kind(value)  # enums take their .value string
    except ValueError:
        raise ValueError(f"{origin}: bad value {value!r} for {key}") from None


def config_from_pairs(pairs: dict[str, str], origin: str = "config") -> PipelineConfig:
    unknown = set(pairs) - set(_CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"{origin}: unknown keys {sorted(unknown)}")
    kwargs = {
        key: _convert(key, value, _CONFIG_FIELDS[key], origin)
        for key, value in pairs.items()
    }
    return PipelineConfig(**kwargs)


def read_config(path: str | Path) -> PipelineConfig:
    return config_from_pairs(read_kv(path), origin=str(path))


def config_pairs(cfg: PipelineConfig) -> dict[str, object]:
    out: dict[str, object] = {}
    for key in _CONFIG_FIELDS:
        value = getattr(cfg, key)
        out[key] = value.value if isinstance(value, (RefVariant, Backend)) else value
    return out


def write_config(cfg: PipelineConfig, path: str | Path) -> None:
    write_kv(config_pairs(cfg), path)


def meta_from_pairs(pairs: dict[str, str], origin: str = "meta") -> SequenceMeta:
    missing = set(_META_FIELDS) - set(pairs)
    if missing:
        raise ValueError(f"{origin}: missing keys {sorted(missing)}")
    unknown = set(pairs) - set(_META_FIELDS)
    if unknown:
        raise ValueError(f"{origin}: unknown keys {sorted(unknown)}")
    kwargs = {
        key: _convert(key, value, _META_FIELDS[key], origin)
        for key, value in pairs.items()
    }
    return SequenceMeta(**kwargs)


def read_meta(path: str | Path) -> SequenceMeta:
    return meta_from_pairs(read_kv(path), origin=str(path))


def write_meta(meta: SequenceMeta, path: str | Path) -> None:
    write_kv(
        {key: getattr(meta, key) for key in _META_FIELDS},
        path,
    )
