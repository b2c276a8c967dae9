"""File output: CSV field dumps, plot-ready tables and the flat JSON summary.

All writers are byte-stable: identical inputs produce identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, Iterable, Mapping

import numpy as np

from ..core import FieldSample

FMT = "%.17g"


def _write_text(path, text: str):
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {p}: {exc.strerror}") from exc


def _fmt(v: float) -> str:
    return FMT % v


def export_field_csv(field: FieldSample, path):
    """Header t,x,value then one row per lattice node, time-major."""
    g = field.grid
    t = np.repeat(g.t[: field.values.shape[0]], g.nx)
    x = np.tile(g.x, field.values.shape[0])
    rows = np.column_stack([t, x, field.values.ravel()])
    lines = ["t,x,value"] + [",".join(_fmt(v) for v in r) for r in rows]
    _write_text(path, "\n".join(lines) + "\n")


def export_table_csv(columns: Mapping[str, np.ndarray], path):
    """Equal-length columns written with a header row, in insertion order."""
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    if len({d.size for d in data}) > 1:
        raise ValueError(f"columns of {path} have different lengths")
    lines = [",".join(names)] + [",".join(_fmt(v) for v in row) for row in zip(*data)]
    _write_text(path, "\n".join(lines) + "\n")


def _json_scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no infinities; keep them readable
        return v if math.isfinite(v) else repr(v)
    return str(v)


def flatten_results(results: Iterable) -> Dict[str, object]:
    """Flat summary {check.metric: value, check.passed: bool, all_passed: bool}."""
    out: Dict[str, object] = {}
    ok = True
    for res in results:
        for key, val in res.metrics.items():
            out[f"{res.name}.{key}"] = _json_scalar(val)
        out[f"{res.name}.passed"] = bool(res.passed)
        ok &= bool(res.passed)
    out["all_passed"] = ok
    return out


def export_summary_json(report: Mapping[str, object], path):
    flat = {str(k): _json_scalar(v) for k, v in report.items()}
    if "all_passed" not in flat:
        flat["all_passed"] = all(v for k, v in flat.items() if k.endswith(".passed"))
    _write_text(path, json.dumps(flat, indent=2, sort_keys=True) + "\n")


def write_results(results, out_dir, config: Mapping):
    """summary.json, config.json, fields/*.csv and series/*.csv under out_dir."""
    out = Path(out_dir)
    export_summary_json(flatten_results(results), out / "summary.json")
    _write_text(out / "config.json", json.dumps(config, indent=2, sort_keys=True) + "\n")
    for res in results:
        for name, fld in res.fields.items():
            export_field_csv(fld, out / "fields" / f"{res.name}__{name}.csv")
        for name, cols in res.series.items():
            export_table_csv(cols, out / "series" / f"{name}.csv")
