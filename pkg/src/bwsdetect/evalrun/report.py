"""Report rendering: JSON, aligned text table, CSV, and figures.

Every artifact echoes the effective configuration so a report can always
be traced back to the exact settings that produced it. Figure output is
deterministic (no embedded software/version metadata).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EvalReport  # noqa: E402

METRIC_COLUMNS = ("Accuracy", "Precision", "Recall", "f-score", "Specificity")
_FIELDS = ("accuracy", "precision", "recall", "f_score", "specificity")


def report_to_dict(report: EvalReport) -> dict:
    doc = {
        "counts": {"tp": report.tp, "fp": report.fp, "tn": report.tn,
                   "fn": report.fn, "n": report.n},
        "metrics": {name: round(getattr(report, name), 4)
                    for name in _FIELDS},
        "undefined": list(report.undefined),
    }
    if report.per_fold:
        doc["per_fold"] = [report_to_dict(f) for f in report.per_fold]
    return doc


def format_text_table(report: EvalReport, method: str = "") -> str:
    """Aligned-column table with one row per fold plus the aggregate."""
    header = ["Row"] + list(METRIC_COLUMNS)
    rows = []
    for i, fold in enumerate(report.per_fold):
        rows.append([f"fold {i}"] + [f"{getattr(fold, f):.2f}"
                                     for f in _FIELDS])
    label = f"{method} aggregate".strip()
    rows.append([label] + [f"{getattr(report, f):.2f}" for f in _FIELDS])
    widths = [max(len(r[c]) for r in [header] + rows)
              for c in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)),
             "  ".join("-" * w for w in widths)]
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def write_report_csv(report: EvalReport, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "tp", "fp", "tn", "fn"] + list(_FIELDS))
        for i, fold in enumerate(report.per_fold):
            writer.writerow([f"fold{i}", fold.tp, fold.fp, fold.tn, fold.fn]
                            + [f"{getattr(fold, f):.4f}" for f in _FIELDS])
        writer.writerow(["aggregate", report.tp, report.fp, report.tn,
                         report.fn]
                        + [f"{getattr(report, f):.4f}" for f in _FIELDS])


def write_predictions_csv(records: List[dict],
                          path: Union[str, Path]) -> None:
    if not records:
        return
    keys = list(records[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for rec in records:
            writer.writerow(["" if rec.get(k) is None else rec.get(k)
                             for k in keys])


_NO_METADATA = {"Software": None}


def render_metrics_figure(report: EvalReport, path: Union[str, Path],
                          method: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    x = range(len(_FIELDS))
    n_series = len(report.per_fold) + 1
    width = 0.8 / n_series
    for i, fold in enumerate(report.per_fold):
        ax.bar([xi + i * width for xi in x],
               [getattr(fold, f) for f in _FIELDS],
               width=width, label=f"fold {i}", alpha=0.6)
    ax.bar([xi + (n_series - 1) * width for xi in x],
           [getattr(report, f) for f in _FIELDS],
           width=width, label="aggregate", color="tab:red")
    ax.set_xticks([xi + 0.4 - width / 2 for xi in x])
    ax.set_xticklabels(METRIC_COLUMNS)
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.set_title(f"{method} evaluation".strip())
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_NO_METADATA)
    plt.close(fig)


def render_confusion_figure(report: EvalReport,
                            path: Union[str, Path]) -> None:
    counts = [[report.tp, report.fn], [report.fp, report.tn]]
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.imshow(counts, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(j, i, str(counts[i][j]), ha="center", va="center")
    ax.set_xticks([0, 1])
    ax.set_yticks([0, 1])
    ax.set_xticklabels(["predicted +", "predicted -"])
    ax.set_yticklabels(["truth +", "truth -"])
    fig.tight_layout()
    fig.savefig(path, metadata=_NO_METADATA)
    plt.close(fig)


def write_report(report: EvalReport, out_dir: Union[str, Path],
                 config_echo: dict, method: str = "",
                 records: Optional[List[dict]] = None,
                 figures: bool = True) -> dict:
    """Write report.{json,txt,csv}, predictions.csv, and figures/*.png.

    Returns {artifact name: path} for everything written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    doc = {"method": method, "config": config_echo,
           "report": report_to_dict(report)}
    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written["report.json"] = json_path

    text_path = out_dir / "report.txt"
    text_path.write_text(format_text_table(report, method))
    written["report.txt"] = text_path

    csv_path = out_dir / "report.csv"
    write_report_csv(report, csv_path)
    written["report.csv"] = csv_path

    if records:
        pred_path = out_dir / "predictions.csv"
        write_predictions_csv(records, pred_path)
        written["predictions.csv"] = pred_path

    if figures:
        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        metrics_png = fig_dir / "metrics.png"
        render_metrics_figure(report, metrics_png, method)
        written["figures/metrics.png"] = metrics_png
        confusion_png = fig_dir / "confusion.png"
        render_confusion_figure(report, confusion_png)
        written["figures/confusion.png"] = confusion_png
    return written
