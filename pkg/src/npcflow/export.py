"""CSV and JSON artifacts.

All files are written atomically (temporary file in the target directory,
then ``os.replace``).  Floats in CSV use 17 significant digits so that a
value read back is bit-identical to the value written.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

TRAJECTORY_SCHEMA = 1
FLOAT_FORMAT = "%.17g"


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def format_float(x) -> str:
    if x is None:
        return "nan"
    return FLOAT_FORMAT % float(x)


def trajectory_columns(space) -> list[str]:
    """Fixed column order: ``t``, point coordinates, ``value``, ``slope``, ``step_distance``."""
    return ["t", *space.coord_names(), "value", "slope", "step_distance"]


def trajectory_rows(traj, space) -> list[list[float]]:
    rows = []
    for i, p in enumerate(traj.points):
        s = None if traj.slopes is None else float(traj.slopes[i])
        rows.append([float(traj.times[i]), *[float(c) for c in space.to_coords(p)],
                     float(traj.values[i]), s, float(traj.step_distances[i])])
    return rows


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_float(v) for v in r])
    return buf.getvalue()


def write_trajectory_csv(path, traj, space) -> Path:
    return atomic_write_text(path, rows_to_csv(trajectory_columns(space),
                                               trajectory_rows(traj, space)))


def trajectory_record(traj, space, functional_descriptor=None, seed=None) -> dict:
    """JSON run record: provenance plus the same table as the CSV."""
    return {
        "schema_version": TRAJECTORY_SCHEMA,
        "space": space.descriptor(),
        "functional": functional_descriptor,
        "provenance": {**traj.provenance, "seed": traj.seed if seed is None else seed,
                       "uncertified_steps": traj.uncertified_steps},
        "columns": trajectory_columns(space),
        "rows": trajectory_rows(traj, space),
    }


def write_trajectory_json(path, traj, space, functional_descriptor=None, seed=None) -> Path:
    return write_json(path, trajectory_record(traj, space, functional_descriptor, seed))


def record_to_csv(record: dict) -> str:
    rows = [[float("nan") if v in (None, "nan") else float(v) for v in r] for r in record["rows"]]
    return rows_to_csv(record["columns"], rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def write_sequence_csv(path, space, points) -> Path:
    """A point sequence as ``n`` followed by coordinate columns."""
    rows = [[float(i), *space.to_coords(p)] for i, p in enumerate(points)]
    return atomic_write_text(path, rows_to_csv(["n", *space.coord_names()], rows))
