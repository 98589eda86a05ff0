"""Flat key = value config files for batch runs.

TOML-like but deliberately minimal: one `key = value` per line, `#`
comments, optional quotes around strings, bare ints/floats/bools coerced.
CLI flags always win over file values.
"""

from __future__ import annotations

from pathlib import Path

from .errors import DataError, IoFailure

_BOOLS = {"true": True, "false": False, "yes": True, "no": False}


def _coerce(raw: str):
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    lowered = raw.lower()
    if lowered in _BOOLS:
        return _BOOLS[lowered]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def load_kv_config(path) -> dict[str, object]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = _coerce(raw.strip())
    return values
