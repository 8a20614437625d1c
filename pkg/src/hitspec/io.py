"""Output writers: versioned CSV tables, JSON summaries and stream files.

Every CSV starts with the line ``# schema=1``.  Numbers are written with
``repr`` (shortest round-trip form), so identical inputs give identical bytes.
Timestamps and other run metadata go to ``meta.json`` only.
"""

from __future__ import annotations

import json
import math
import platform
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_LINE = "# schema=1"
SPECTRUM_COLUMNS = ("q", "value", "kind", "stderr")
RATE_COLUMNS = ("u", "value", "kind", "stderr")
LN2 = math.log(2.0)


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [SCHEMA_LINE, ",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[list, list]:
    """Header and rows (as strings) of a file written by :func:`write_csv`."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SCHEMA_LINE:
        raise ValueError(f"{path}: missing schema line")
    header = lines[1].split(",")
    return header, [ln.split(",") for ln in lines[2:]]


def spectrum_rows(curves, log2: bool = False):
    """Rows ``(q, value, kind, stderr)``; ``log2`` rescales value and stderr to bits."""
    scale = 1.0 / LN2 if log2 else 1.0
    for curve in curves:
        for q, v, kind, s in curve.rows():
            yield q, v * scale, kind, s * scale


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_meta(outdir, command: str, extra: dict | None = None) -> Path:
    import numba
    import scipy

    from . import __version__

    meta = {
        "command": command,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }
    meta.update(extra or {})
    return write_json(Path(outdir) / "meta.json", meta)


def write_stream(path, symbols_iter) -> int:
    """Write symbols as one ASCII digit per byte (no newline); returns the length."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    total = 0
    with open(path, "wb") as fh:
        for chunk in symbols_iter:
            fh.write((np.asarray(chunk, dtype=np.uint8) + ord("0")).tobytes())
            total += len(chunk)
    return total


def read_stream(path) -> np.ndarray:
    data = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    return data - ord("0")
