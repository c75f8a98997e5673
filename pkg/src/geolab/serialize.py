"""JSON and CSV round-tripping for points, vectors and reports."""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

import numpy as np

from . import models as M


def fmt(x) -> str:
    """Round-trip decimal formatting (17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def point_to_json(p: M.ManifoldPoint) -> dict:
    return {"model": p.model, "coords": p.coords.tolist()}


def point_from_json(d: dict) -> M.ManifoldPoint:
    return M.point(d["model"], np.array(d["coords"], dtype=float))


def vector_to_json(v: M.TangentVector) -> dict:
    out = {"base": point_to_json(v.base), "ambient": v.ambient.tolist()}
    if v.fiber_t is not None:
        out["fiber_t"] = v.fiber_t
    return out


def vector_from_json(d: dict) -> M.TangentVector:
    return M.vector(point_from_json(d["base"]), np.array(d["ambient"], dtype=float), d.get("fiber_t"))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
