"""Plain-CSV plot data derived from an artifact bundle, with column schemas."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List

from . import io

PLOT_KINDS: Dict[str, Dict[str, str]] = {
    "barrier-heatmap": {
        "i": "source node index",
        "j": "target node index",
        "x_i": "source node coordinate in [0, 1)",
        "x_j": "target node coordinate in [0, 1)",
        "h_inf": "Peierls barrier value (inf when unreachable)",
    },
    "orbit-waterfall": {
        "orbit": "index of the random initial datum",
        "period": "number of one-period steps applied",
        "x": "node coordinate in [0, 1)",
        "value": "value function at that node",
    },
    "convergence": {
        "orbit": "index of the random initial datum",
        "period": "number of one-period steps applied",
        "sup_increment": "sup-norm distance to the previous snapshot",
    },
    "classes": {
        "node": "Mather node index",
        "x": "node coordinate in [0, 1)",
        "class_id": "static class index, ordered by representative",
        "representative": "smallest node index of the class",
    },
}


def _grid_size(bundle: Path) -> int:
    report = io.read_json(bundle / "report.json")
    sc = report["config"]["scenario"]
    if isinstance(sc, dict) and sc.get("kind") == "matrix":
        return int(report["dim"])
    return int(report["config"]["grid"]["n_x"])


def _orbit_files(bundle: Path) -> List[Path]:
    files = sorted((bundle / "orbits").glob("orbit_*.csv"))
    if not files:
        raise FileNotFoundError(f"bundle {bundle} has no orbits; run the evolve stage first")
    return files


def _read_orbit(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]


def emit_plot_data(bundle, kind: str, out=None) -> Path:
    """Write ``<kind>.csv`` and ``<kind>.schema.json`` into ``out`` (default: bundle/plots).

    Raises
    ------
    ValueError
        For an unknown ``kind``.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    bundle = Path(bundle)
    out = Path(out) if out is not None else bundle / "plots"
    out.mkdir(parents=True, exist_ok=True)
    n = _grid_size(bundle)
    header = list(PLOT_KINDS[kind])
    rows = []
    if kind == "barrier-heatmap":
        H = io.read_matrix_csv(bundle / "h_inf.csv")
        for i in range(H.shape[0]):
            for j in range(H.shape[1]):
                rows.append([i, j, i / n, j / n, float(H[i, j])])
    elif kind == "classes":
        doc = io.read_json(bundle / "classes.json")["static_classes"]
        for cid, members in enumerate(doc["classes"]):
            for node in members:
                rows.append([node, node / n, cid, members[0]])
        rows.sort(key=lambda r: r[0])
    else:
        for oid, path in enumerate(_orbit_files(bundle)):
            head, data = _read_orbit(path)
            first = head.index("sup_increment") + 1
            for row in data:
                period = int(row[0])
                if kind == "convergence":
                    if period:
                        rows.append([oid, period, float(row[2])])
                else:
                    for node, val in enumerate(row[first:]):
                        rows.append([oid, period, node / n, io.parse_float(val)])
    target = out / f"{kind}.csv"
    io.write_table_csv(target, header, rows)
    io.write_json(out / f"{kind}.schema.json", {"kind": kind, "columns": [
        {"name": c, "description": d} for c, d in PLOT_KINDS[kind].items()]})
    return target
