"""Lossless text serialisation: 17 significant digits, ``inf`` for unreachable."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def format_float(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def parse_float(s: str) -> float:
    return float(s.strip())


def jsonable(obj):
    """Recursively convert numpy scalars/arrays into plain JSON structures.

    Non-finite floats become the strings ``"inf"`` / ``"-inf"``.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(float(obj)) else format_float(obj)
    return obj


def _iterencode(o, indent, level=0):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(o, dict):
        if not o:
            yield "{}"
            return
        yield "{"
        for n, k in enumerate(sorted(o)):
            if n:
                yield ","
            yield pad + json.dumps(k) + ": "
            yield from _iterencode(o[k], indent, level + 1)
        yield end + "}"
    elif isinstance(o, list):
        if not o:
            yield "[]"
            return
        yield "["
        for n, v in enumerate(o):
            if n:
                yield ","
            yield pad
            yield from _iterencode(v, indent, level + 1)
        yield end + "]"
    elif isinstance(o, float):
        yield format_float(o)
    else:
        yield json.dumps(o)


def dumps(obj, indent: int = 2) -> str:
    """Canonical JSON: sorted keys, 17-digit floats, ``"inf"`` strings."""
    return "".join(_iterencode(jsonable(obj), indent)) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_matrix_csv(path, M) -> None:
    """Row-major CSV without header; unreachable entries written as ``inf``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([format_float(x) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[parse_float(s) for s in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=float)


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])


def matrix_to_json(M, **metadata) -> dict:
    M = np.asarray(M, dtype=float)
    return {"shape": list(M.shape), "entries": M.ravel().tolist(), **metadata}


def matrix_from_json(doc) -> np.ndarray:
    return np.array([float(x) for x in doc["entries"]], dtype=float).reshape(doc["shape"])
