"""Post-processing of sweep CSVs: aggregate tables and figures.

The experiment driver emits one row per trial; this module collapses
those into per-(deployment, error, algorithm) means, writes them back
out as a delimited summary, and renders the two standard comparison
figures (recall and average offset against error magnitude) next to it.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def load_rows(path) -> list[dict]:
    """Per-trial data rows of a sweep CSV (aggregate rows are dropped)."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row.get("trial_index") == "mean":
                continue
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _mean_of(rows, column) -> Optional[float]:
    values = [float(r[column]) for r in rows if r[column] not in ("", None)]
    if not values:
        return None
    return sum(values) / len(values)


def summarize(rows: list[dict]) -> list[dict]:
    """Mean recall/offset/flips per (deployment, err_mag, algorithm)."""
    groups = defaultdict(list)
    for row in rows:
        key = (row["deployment"], float(row["err_mag"]), row["algorithm"])
        groups[key].append(row)
    summary = []
    for (deployment, err_mag, algorithm) in sorted(groups):
        cell = groups[(deployment, err_mag, algorithm)]
        summary.append(
            {
                "deployment": deployment,
                "err_mag": err_mag,
                "algorithm": algorithm,
                "trials": len(cell),
                "mean_recall_pct": _mean_of(cell, "recall_pct"),
                "mean_avg_offset": _mean_of(cell, "avg_offset"),
                "mean_flips": _mean_of(cell, "flips"),
                "mean_runtime_ms": _mean_of(cell, "runtime_ms"),
            }
        )
    return summary


def write_summary(summary: list[dict], path) -> None:
    columns = [
        "deployment",
        "err_mag",
        "algorithm",
        "trials",
        "mean_recall_pct",
        "mean_avg_offset",
        "mean_flips",
        "mean_runtime_ms",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for entry in summary:
            writer.writerow(
                ["" if entry[c] is None else entry[c] for c in columns]
            )


def _series(summary, value_key):
    series = defaultdict(list)
    for entry in summary:
        if entry[value_key] is None:
            continue
        label = entry["algorithm"]
        if len({e["deployment"] for e in summary}) > 1:
            label = f"{entry['deployment']} {entry['algorithm']}"
        series[label].append((entry["err_mag"], entry[value_key]))
    return series


def _render_metric(summary, value_key, ylabel, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, points in sorted(_series(summary, value_key).items()):
        points.sort()
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            marker="o",
            label=label,
        )
    ax.set_xlabel("error magnitude")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(csv_path, out_dir) -> list[str]:
    """Summary CSV plus recall/offset figures; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    rows = load_rows(csv_path)
    summary = summarize(rows)
    outputs = []
    summary_path = os.path.join(out_dir, "summary.csv")
    write_summary(summary, summary_path)
    outputs.append(summary_path)
    recall_path = os.path.join(out_dir, "recall_vs_error.png")
    _render_metric(summary, "mean_recall_pct", "mean recall (%)", recall_path)
    outputs.append(recall_path)
    offset_path = os.path.join(out_dir, "offset_vs_error.png")
    _render_metric(
        summary, "mean_avg_offset", "mean offset (units/node)", offset_path
    )
    outputs.append(offset_path)
    return outputs
