"""Deterministic CSV/JSON reading and writing."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError

FLOAT_FORMAT = ".17g"


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FORMAT)
    return str(v)


def write_csv(path, header: Sequence[str], columns: Sequence[Sequence[Any]]) -> Path:
    """Write equal-length ``columns`` under ``header`` with full double precision."""
    path = Path(path)
    cols = [list(c) for c in columns]
    if len(cols) != len(header):
        raise ValueError("one column per header entry")
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(n):
            w.writerow([_fmt(c[i]) for c in cols])
    return path


def write_rows(path, header: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> Path:
    """Write dict rows; missing keys become empty cells."""
    return write_csv(path, header, [[r.get(h) for r in rows] for h in header])


def read_csv(path) -> dict[str, np.ndarray]:
    """Numeric columns of a CSV file with a header row."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config not found", path=str(path))
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        cols = {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"malformed CSV file: {exc}", path=str(path)) from exc
    return cols


def _clean(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps(obj: Any) -> str:
    """JSON text with sorted keys; non-finite floats become strings."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config not found", path=str(path))
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", path=str(path)) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", path=str(path))
    return data
