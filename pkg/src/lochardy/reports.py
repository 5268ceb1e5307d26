"""JSON and CSV writers plus readers for field files.

Output is deterministic: keys are sorted and floats keep ``repr`` precision.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .tent import TentField, TimeGrid

__all__ = ["to_plain", "write_json", "write_csv", "read_json", "tent_field_from_json",
           "vector_to_json", "vector_from_json"]


def to_plain(x):
    """Recursively convert numpy scalars, arrays and complex numbers to JSON types."""
    if hasattr(x, "to_json") and not isinstance(x, type):
        return to_plain(x.to_json())
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [to_plain(x.real), to_plain(x.imag)]
    return x


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [to_plain(r) for r in rows]
    columns = columns or (sorted({k for r in rows for k in r}) if rows else [])
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def tent_field_from_json(doc: dict) -> TentField:
    g = doc.get("grid", {})
    grid = TimeGrid(q=g.get("q", TimeGrid.q), M=g.get("M", TimeGrid.M),
                    rule=g.get("rule", TimeGrid.rule))
    vals = np.asarray(doc["real"], dtype=float)
    if "imag" in doc:
        vals = vals + 1j * np.asarray(doc["imag"], dtype=float)
    return TentField(grid, vals)


def vector_to_json(u) -> dict:
    u = np.asarray(u)
    return {"real": u.real.tolist(), "imag": u.imag.tolist()}


def vector_from_json(doc) -> np.ndarray:
    if isinstance(doc, list):
        return np.asarray(doc, dtype=complex)
    u = np.asarray(doc["real"], dtype=float)
    return u + 1j * np.asarray(doc["imag"], dtype=float) if "imag" in doc else u.astype(complex)
