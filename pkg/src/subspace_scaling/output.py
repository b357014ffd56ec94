"""CSV and JSON writers for experiment outputs.

Floats are written with ``repr`` so files round-trip exactly and identical
runs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("experiment_id", "t", "direction", "statistic", "value")
STATISTICS = ("mean", "std", "theory", "abs_err")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_rows(path: str | Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_rows(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def trajectory_rows(experiment_id: str, times, **stats):
    """Rows (id, t, direction, statistic, value); each statistic is a (times x d) array."""
    for name in stats:
        if name not in STATISTICS:
            raise ValueError(f"unknown statistic {name!r}")
    times = np.asarray(times, dtype=float)
    for i, t in enumerate(times):
        for name in STATISTICS:
            if name not in stats:
                continue
            values = np.asarray(stats[name], dtype=float)
            for j in range(values.shape[1]):
                yield (experiment_id, float(t), j + 1, name, float(values[i, j]))


def write_trajectory_csv(path, experiment_id: str, times, **stats) -> Path:
    return write_rows(path, TRAJECTORY_COLUMNS, trajectory_rows(experiment_id, times, **stats))


def write_trials_csv(path, experiment_id: str, times, cosines, trial_ids=None) -> Path:
    """Raw per-trial cosines, one row per (trial, time, direction)."""
    cosines = np.asarray(cosines, dtype=float)
    ids = range(cosines.shape[0]) if trial_ids is None else trial_ids

    def rows():
        for trial, c in zip(ids, cosines):
            for i, t in enumerate(times):
                for j in range(c.shape[1]):
                    yield (experiment_id, int(trial), float(t), j + 1, float(c[i, j]))

    return write_rows(path, ("experiment_id", "trial", "t", "direction", "cosine"), rows())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
