"""Report emission: flat CSV/JSON tables plus bar-chart figures.

One row per (provider, mode, unit). Numeric cells are written with six
decimals so CSV and JSON agree after parsing; absent metrics stay empty.
Figures are rendered with the Agg backend straight to PNG files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .exceptions import ConfigError
from .runner import SIMILARITY_METRICS, TASKS, EvalSummary

CLASSIFICATION_COLUMNS = ("precision", "recall", "f1", "accuracy")
COUNT_COLUMNS = ("tp", "fp", "fn", "tn", "scored_windows", "unscored_windows")

COLUMNS: tuple[str, ...] = (
    ("provider", "mode", "unit")
    + COUNT_COLUMNS
    + CLASSIFICATION_COLUMNS
    + tuple(f"{task}_{metric}" for task in TASKS for metric in SIMILARITY_METRICS)
    + tuple(f"pooled_{metric}" for metric in SIMILARITY_METRICS)
)


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def summary_rows(summary: EvalSummary | dict) -> list[dict[str, object]]:
    """Flatten a summary into plot-ready rows under the fixed column order."""
    doc = summary.to_dict() if isinstance(summary, EvalSummary) else summary
    rows = []
    for entry in doc["rows"]:
        row: dict[str, object] = {
            "provider": entry["provider"],
            "mode": entry["mode"],
            "unit": entry["unit"],
        }
        for column in COUNT_COLUMNS:
            row[column] = entry[column]
        for column in CLASSIFICATION_COLUMNS:
            row[column] = entry[column]
        for task in TASKS:
            for metric in SIMILARITY_METRICS:
                row[f"{task}_{metric}"] = entry["task_means"][task][metric]
        for metric in SIMILARITY_METRICS:
            row[f"pooled_{metric}"] = entry["pooled_means"][metric]
        rows.append(row)
    return rows


def write_csv(rows: list[dict[str, object]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    _fmt(row[c]) if isinstance(row[c], float) else row[c]
                    for c in COLUMNS
                ]
            )


def write_json(rows: list[dict[str, object]], path: Path) -> None:
    serializable = []
    for row in rows:
        out = {}
        for column in COLUMNS:
            value = row[column]
            out[column] = round(value, 6) if isinstance(value, float) else value
        serializable.append(out)
    path.write_text(json.dumps(serializable, indent=2) + "\n", encoding="utf-8")


def _classification_figure(rows: list[dict[str, object]], path: Path) -> None:
    labels = [f"{r['provider']}\n{r['mode']}/{r['unit']}" for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 4))
    width = 0.2
    for offset, metric in enumerate(CLASSIFICATION_COLUMNS):
        xs = [i + (offset - 1.5) * width for i in range(len(rows))]
        ax.bar(xs, [r[metric] for r in rows], width=width, label=metric)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Classification metrics by provider and mode")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _similarity_figure(rows: list[dict[str, object]], path: Path) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    for ax, metric in zip(axes.flat, SIMILARITY_METRICS):
        width = 0.8 / max(len(rows), 1)
        for offset, row in enumerate(rows):
            values = [
                row[f"{task}_{metric}"] if row[f"{task}_{metric}"] is not None else 0.0
                for task in TASKS
            ]
            xs = [i + offset * width for i in range(len(TASKS))]
            ax.bar(xs, values, width=width, label=f"{row['provider']}/{row['mode']}")
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(TASKS))])
        ax.set_xticklabels([t.replace("_", "\n") for t in TASKS], fontsize=8)
        ax.set_title(metric, fontsize=10)
        ax.set_ylim(0, 1.05)
    handles, labels = axes.flat[0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="lower center", ncol=min(4, len(labels)), fontsize=8)
    fig.suptitle("Similarity means per task")
    fig.tight_layout(rect=(0, 0.06, 1, 1))
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_report(
    summary: EvalSummary | dict,
    out_dir: Path,
    fmt: str = "csv",
    figures: bool = True,
) -> list[Path]:
    """Write report.<fmt> (plus figures) under out_dir; returns written paths."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = summary_rows(summary)
    written = []
    if fmt == "csv":
        target = out_dir / "report.csv"
        write_csv(rows, target)
    else:
        target = out_dir / "report.json"
        write_json(rows, target)
    written.append(target)
    if figures:
        scenario_rows = [r for r in rows if r["unit"] == "scenario"] or rows
        classification_png = out_dir / "classification_metrics.png"
        similarity_png = out_dir / "similarity_tasks.png"
        _classification_figure(scenario_rows, classification_png)
        _similarity_figure(scenario_rows, similarity_png)
        written.extend([classification_png, similarity_png])
    return written
