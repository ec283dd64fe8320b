"""Artifact emission: report.json, tables/*.csv, plots/*.svg, manifest.json."""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .experiments import ExperimentReport


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _dump(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), sort_keys=True, indent=2) + "\n")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    cols = list(rows[0])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in cols])


def manifest(cfg: ExperimentConfig, report: ExperimentReport) -> dict:
    import matplotlib
    import scipy

    from .. import __version__

    return {
        "config_sha256": cfg.digest(),
        "config": cfg.identity(),
        "seeds": report.seeds,
        "versions": {
            "manifold_extremes": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
            "python": platform.python_version(),
        },
    }


def write_outputs(report: ExperimentReport, cfg: ExperimentConfig, out: str | Path, runtime: float | None = None) -> Path:
    out = Path(out)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    _dump(out / "report.json", report.to_dict())
    _dump(out / "manifest.json", manifest(cfg, report))
    for name, rows in report.tables.items():
        write_csv(out / "tables" / f"{name}.csv", rows)
    from .plots import plot_report

    plot_report(report, out / "plots")
    if runtime is not None:
        # kept apart from report.json so that file stays byte-reproducible
        _dump(out / "timing.json", {"runtime_seconds": runtime})
    return out
