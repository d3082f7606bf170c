"""Deterministic JSON and CSV output for audit reports."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

LEVEL_COLUMNS = ["m", "C_m", "E_m", "F_m", "level_set_measure", "rhs_bound", "holds"]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    """JSON with sorted keys and shortest round-trip floats; inf becomes ``"inf"``, NaN ``null``."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def write_level_csv(path, rows, columns=LEVEL_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _fmt(x):
    x = _clean(x)
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return x
