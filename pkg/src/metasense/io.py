"""Deterministic file output: atomic writes, stable JSON and CSV."""

import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

from .exceptions import DomainError
from .structure import SignalTrace


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """JSON with sorted keys and a trailing newline; NaN becomes null."""
    return json.dumps(_sanitize(obj), indent=2, sort_keys=True,
                      default=_default, allow_nan=False) + "\n"


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def atomic_write(path, text):
    """Write text via a temp file in the same directory and rename it."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def csv_text(header, rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "" if not np.isfinite(v) else format(v, ".12g")


def read_trace_csv(path, unit="m", label=""):
    """Load a two-column ``t_s,<value>`` CSV into a uniformly sampled trace."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][0] != "t_s":
        raise DomainError(f"{path}: expected a 't_s,<value>' CSV")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    dt = np.diff(data[:, 0])
    if np.any(dt <= 0) or np.ptp(dt) > 1e-6 * dt.mean():
        raise DomainError(f"{path}: time column is not uniformly sampled")
    header = rows[0][1]
    if header.endswith("_mm"):
        unit = "mm"
    elif header.endswith("_m"):
        unit = "m"
    return SignalTrace(float(dt.mean()), data[:, 1], label or header, unit,
                       float(data[0, 0]))
