"""Flat key=value config files (run configs and CLI manifests).

Lines are ``key = value`` (or ``key=value``); blank lines and ``#``
comments are ignored.  Values keep their string form; typed accessors
coerce on demand.  List-valued keys use comma separation.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def load_kv_file(path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text())


def get_float(cfg: dict, key: str, default: float | None = None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {cfg[key]!r}") from exc


def get_int(cfg: dict, key: str, default: int | None = None) -> int:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not an integer: {cfg[key]!r}") from exc


def get_str(cfg: dict, key: str, default: str | None = None) -> str:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return cfg[key]


def get_float_list(cfg: dict, key: str, default: list[float] | None = None) -> list[float]:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return list(default)
    items = [s for s in cfg[key].split(",") if s.strip()]
    if not items:
        raise ConfigError(f"key {key!r}: empty list")
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: bad list {cfg[key]!r}") from exc


def get_int_list(cfg: dict, key: str, default: list[int] | None = None) -> list[int]:
    vals = get_float_list(cfg, key, None if default is None else [float(v) for v in default])
    out = []
    for v in vals:
        if v != int(v):
            raise ConfigError(f"key {key!r}: expected integers")
        out.append(int(v))
    return out


def get_str_list(cfg: dict, key: str, default: list[str] | None = None) -> list[str]:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return list(default)
    items = [s.strip() for s in cfg[key].split(",") if s.strip()]
    if not items:
        raise ConfigError(f"key {key!r}: empty list")
    return items
