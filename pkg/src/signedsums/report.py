"""Run manifests, CSV sweeps and gnuplot scripts."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

import numpy as np

CSV_FIELDS = [
    "run_id", "theorem", "n", "delta", "body_k", "body_d", "t", "threshold",
    "bound", "empirical", "trials", "inner_samples", "seed", "pass",
]


def fmt_float(x: float) -> str:
    """17 significant digits, enough for an exact round trip."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def plain(obj: Any) -> Any:
    """Convert dataclasses / numpy values into JSON-ready Python objects."""
    if hasattr(obj, "as_dict"):
        return plain(obj.as_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats written to 17 significant digits."""
    obj = plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k), indent, _level + 1)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def run_id_for(command: str, seed: int) -> str:
    return hashlib.sha256(f"{command}\0{seed}".encode()).hexdigest()[:16]


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def csv_row(record: dict, run_id: str, seed: int) -> dict:
    """Flatten one result record onto the fixed CSV schema."""
    kind = record.get("kind", "")
    result = record.get("result", {})
    params = dict(record.get("params", {}))
    params.update(result.get("params", {}) if isinstance(result, dict) else {})
    row = dict.fromkeys(CSV_FIELDS, "")
    row.update(run_id=run_id, seed=seed)
    for key in ("n", "delta", "body_k", "body_d", "t"):
        if params.get(key) is not None:
            row[key] = params[key]
    if kind == "verdict":
        row.update(
            theorem=result["theorem_id"],
            threshold=result["threshold_used"],
            bound=result["bound"],
            empirical=result["empirical"],
            trials=result["trials"],
            inner_samples=result["inner_samples"],
        )
        row["pass"] = result["pass"]
    elif kind == "gamma":
        row.update(theorem="gamma", empirical=result["value"], trials=result["samples"])
    elif kind == "tdelta":
        row.update(theorem="tdelta", empirical=result["t_value"], bound=0.5,
                   threshold=result["target"], trials=result["samples"])
    else:
        row["theorem"] = kind
    return {k: fmt_float(v) if isinstance(v, float) else v for k, v in row.items()}


def write_csv(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


GNUPLOT_TEMPLATE = """\
# {name}: empirical value and bound per run, read from results.csv
set datafile separator ','
set terminal pngcairo size 900,600
set output 'plot_{name}.png'
set title '{name}: empirical vs bound'
set xlabel 'n'
set ylabel 'probability / value'
set logscale y
set key left top
plot 'results.csv' every ::1 using 3:(strcol(2) eq '{name}' ? $10 : NaN) with points pt 7 title 'empirical', \\
     'results.csv' every ::1 using 3:(strcol(2) eq '{name}' ? $9 : NaN) with points pt 6 title 'bound'
"""


def write_plot_scripts(out: Path, theorems: Iterable[str]) -> list[Path]:
    paths = []
    for name in sorted(set(theorems)):
        if not name:
            continue
        path = out / f"plot_{name}.gp"
        path.write_text(GNUPLOT_TEMPLATE.format(name=name))
        paths.append(path)
    return paths


def write_report(out, manifest: dict) -> dict:
    """Write manifest.json, results.csv and plot_<theorem>.gp into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(dumps(manifest) + "\n")
    rows = [csv_row(r, manifest["run_id"], manifest["seed"]) for r in manifest["results"]]
    write_csv(out / "results.csv", rows)
    plots = write_plot_scripts(out, (r["theorem"] for r in rows))
    return {"manifest": str(out / "manifest.json"), "csv": str(out / "results.csv"),
            "plots": [str(p) for p in plots]}
