"""
Reports for robustness runs: curve and record CSVs, the markdown table in
model / dataset / method rows, survey histograms and the reproducibility
manifest.
"""

import json
import logging
import os
import platform
import sys
from datetime import datetime
from importlib import metadata
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from .evaluation import CardinalitySurvey, ComparisonReport, RobustnessCurve

logger = logging.getLogger(__name__)

CURVE_COLUMNS = [
    "model", "dataset", "method", "checkpoint_pct", "accuracy",
    "mean_queries", "mean_seconds", "n_evaluated", "n_errors",
]
FORMATS = ("csv", "table-text")
TRACKED_PACKAGES = ("numpy", "pandas", "tqdm")


def curve_frame(curves: Iterable[RobustnessCurve]) -> pd.DataFrame:
    """One row per (curve, checkpoint)"""
    rows = []
    for curve in curves:
        queries = curve.mean_over_correct("queries")
        seconds = curve.mean_over_correct("seconds")
        for checkpoint in curve.checkpoints:
            rows.append({
                "model": curve.model,
                "dataset": curve.dataset,
                "method": curve.method,
                "checkpoint_pct": checkpoint,
                "accuracy": curve.accuracy_at(checkpoint),
                "mean_queries": queries,
                "mean_seconds": seconds,
                "n_evaluated": curve.n_evaluated,
                "n_errors": curve.n_errors,
            })
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def read_curve_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path)


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def _checkpoint_label(checkpoint: float) -> str:
    return f"{checkpoint:g}%"


def curve_table(frame: pd.DataFrame) -> str:
    """Markdown table: one row per (model, dataset, method), one column per checkpoint"""
    checkpoints = sorted(frame["checkpoint_pct"].unique()) if not frame.empty else []
    header = "| Model | Dataset | Method | " + " | ".join(_checkpoint_label(c) for c in checkpoints) + " |"
    divider = "|---|---|---|" + "---|" * len(checkpoints)
    lines = [header, divider]
    for (model, dataset, method), group in frame.groupby(["model", "dataset", "method"], sort=False):
        by_checkpoint = dict(zip(group["checkpoint_pct"], group["accuracy"]))
        cells = " | ".join(_pct(by_checkpoint[c]) if c in by_checkpoint else "" for c in checkpoints)
        lines.append(f"| {model} | {dataset} | {method} | {cells} |")
    return "\n".join(lines) + "\n"


def emit(curves: List[RobustnessCurve], path: str, fmt: str = "csv") -> str:
    """
    Write curves as CSV (CURVE_COLUMNS) or as a markdown table.

    Returns:
        The written path
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    frame = curve_frame(curves)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if fmt == "csv":
        frame.to_csv(path, index=False)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(curve_table(frame))
    logger.info("Wrote %s report to %s", fmt, path)
    return path


def save_records(curve: RobustnessCurve, path: str) -> str:
    records = curve.records.copy()
    records.insert(0, "method", curve.method)
    records.to_csv(path, index=False)
    return path


def comparison_frame(report: ComparisonReport) -> pd.DataFrame:
    rows = [
        {
            "checkpoint_pct": c,
            f"accuracy_{report.a.method}": report.a.accuracy_at(c),
            f"accuracy_{report.b.method}": report.b.accuracy_at(c),
            "delta": delta,
        }
        for c, delta in report.deltas.items()
    ]
    return pd.DataFrame(rows)


def comparison_text(report: ComparisonReport) -> str:
    """Markdown summary of a paired comparison"""
    lines = [
        f"# Comparison: {report.a.method} vs {report.b.method}",
        "",
        f"- **Model:** {report.a.model}",
        f"- **Dataset:** {report.a.dataset}",
        f"- **Inputs:** {report.a.n_evaluated} / {report.b.n_evaluated} evaluated",
        f"- **Mean accuracy gap:** {_pct(report.mean_gap)} points",
        "",
        "| Checkpoint | " + f"{report.a.method} | {report.b.method} | Delta |",
        "|---|---|---|---|",
    ]
    for c, delta in report.deltas.items():
        lines.append(
            f"| {_checkpoint_label(c)} | {_pct(report.a.accuracy_at(c))} | "
            f"{_pct(report.b.accuracy_at(c))} | {_pct(delta)} |"
        )
    return "\n".join(lines) + "\n"


def emit_survey(survey: CardinalitySurvey, directory: str, prefix: str = "survey") -> Dict[str, str]:
    """Write per-input cardinalities, the histogram and the summary"""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "per_input": os.path.join(directory, f"{prefix}_cardinalities.csv"),
        "histogram": os.path.join(directory, f"{prefix}_histogram.csv"),
        "summary": os.path.join(directory, f"{prefix}_summary.json"),
    }
    survey.per_input.to_csv(paths["per_input"], index=False)
    survey.histogram.to_csv(paths["histogram"], index=False)
    with open(paths["summary"], "w", encoding="utf-8") as f:
        json.dump(survey.summary, f, indent=2)
    return paths


def package_versions() -> Dict[str, str]:
    versions = {"python": sys.version.split()[0], "platform": platform.platform()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(
    directory: str,
    command: str,
    settings: Dict[str, Any],
    seeds: Optional[Dict[str, int]] = None,
    outputs: Optional[List[str]] = None,
) -> str:
    """
    Write manifest.json (command, settings, seeds, versions, timestamp) into directory.

    Returns:
        Path to the manifest
    """
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "command": command,
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "settings": settings,
        "seeds": seeds or {},
        "versions": package_versions(),
        "outputs": outputs or [],
    }
    path = os.path.join(directory, "manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, default=str)
    return path
