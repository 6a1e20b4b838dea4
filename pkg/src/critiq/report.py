"""CSV / JSON emission with fixed headers.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CYCLES_HEADER = ("cycle_id", "n_served", "busy", "idle", "censored")
SURVIVAL_HEADER = ("x", "survival", "se", "sqrtx_survival")
N_SURVIVAL_HEADER = ("n", "survival", "se", "sqrtn_survival")
BRAVO_HEADER = ("t", "mean_D", "var_D", "ratio", "ci_half")
SWEEP_HEADER = ("rho", "t_horizon", "ratio", "ci_half")
UI_HEADER = ("t", "mean_q2_over_t", "p99_q2_over_t", "running_max_mean")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_cycles(path: Path | str, batch) -> Path:
    rows = zip(
        range(len(batch)), batch.n_served, batch.busy, batch.idle, batch.censored
    )
    return write_csv(path, CYCLES_HEADER, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path: Path | str, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True)
