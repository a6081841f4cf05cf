"""CSV/JSON helpers with reproducible number formatting."""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    return FLOAT_FMT % float(x)


def format_csv(columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    """CSV text: '#'-prefixed ``key=value`` metadata lines, a header, then rows."""
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key}={json.dumps(_jsonable(val), sort_keys=True)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path!r}: {exc}") from exc


def read_csv(path: str) -> tuple[dict, list[str], np.ndarray]:
    """(metadata, column names, numeric array) from a file written by :func:`format_csv`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from exc
    meta, header, rows = {}, None, []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            try:
                meta[key] = json.loads(val)
            except json.JSONDecodeError:
                meta[key] = val
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append(line.split(","))
    if header is None:
        raise ConfigError(f"{path}: no header row")
    try:
        arr = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric cell ({exc})") from exc
    return meta, header, arr.reshape(len(rows), len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
