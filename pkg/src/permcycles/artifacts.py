"""CSV and JSON artifacts.

Every CSV starts with ``# config: {...}`` carrying the run configuration as
compact JSON, optionally followed by ``# created: <UTC timestamp>``, then a
normal header row. Readers can skip lines starting with ``#``.
"""
from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exact import CycleCountDistribution, ExactTable


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)  # JSON has no inf/nan
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence], config: dict | None = None,
              timestamp: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# config: {dumps(config or {})}\n")
        if timestamp:
            fh.write(f"# created: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """(config, rows) of a file written by :func:`write_csv`; values stay strings."""
    config: dict = {}
    lines = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# config: "):
                config = json.loads(line[len("# config: "):])
            elif not line.startswith("#"):
                lines.append(line)
    return config, list(csv.DictReader(lines))


def write_json(path: str | Path, payload: dict, config: dict | None = None, timestamp: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    if config is not None:
        body["config"] = config
    if timestamp:
        body["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path.write_text(json.dumps(_plain(body), sort_keys=True, indent=2) + "\n")
    return path


def pmf_rows(dist: CycleCountDistribution):
    p = dist.prob
    for k in range(dist.k_max + 1):
        yield dist.n, k, float(dist.log_mass[k]), float(p[k])


PMF_COLUMNS = ("n", "k", "log_mass", "prob")
TABLE_COLUMNS = ("n", "log_h")
HIST_COLUMNS = ("n", "k", "count")
SADDLE_COLUMNS = ("x", "r_x", "g", "b", "eta1", "eta2", "eta3", "eta4")
ADMISSIBILITY_COLUMNS = ("condition", "r", "margin", "verdict")


def table_rows(table: ExactTable):
    for n in range(table.N + 1):
        yield n, float(table.log_h[n])


def histogram_rows(n: int, hist: np.ndarray):
    for k, c in enumerate(hist):
        if c:
            yield n, k, int(c)
