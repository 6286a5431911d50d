"""Comparative report rendering: delimited rows plus matplotlib figures.

The pipeline's evaluation produces one row per realizer input; this module
writes those rows as a TSV and renders summary bar charts next to it.  The
byte output is deterministic for fixed inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

TSV_COLUMNS = (
    "realizer",
    "mean_adherence",
    "bleu_1",
    "bleu_2",
    "bleu_3",
    "bleu_4",
    "rouge_l",
    "meteor_lite",
    "cider",
    "distinct_1",
    "mean_length",
    "embedding_f1",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_report_tsv(rows: Sequence[dict], path: str | Path) -> None:
    lines = ["\t".join(TSV_COLUMNS)]
    for row in rows:
        lines.append("\t".join(_cell(row.get(col)) for col in TSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _bar_panel(ax, rows: Sequence[dict], key: str, title: str) -> None:
    names = [row["realizer"] for row in rows]
    values = [row.get(key) or 0.0 for row in rows]
    ax.bar(range(len(names)), values, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_title(title, fontsize=9)
    ax.tick_params(axis="y", labelsize=8)
    ax.grid(axis="y", alpha=0.3, linewidth=0.5)


def render_report_figures(
    rows: Sequence[dict], outdir: str | Path, stem: str = "report"
) -> list[Path]:
    """Render quality and diversity bar charts; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(7.2, 2.8), constrained_layout=True)
    _bar_panel(axes[0], rows, "bleu_1", "BLEU-1 vs ground truth")
    _bar_panel(axes[1], rows, "mean_adherence", "Mean plan adherence")
    path = outdir / f"{stem}_quality.png"
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(7.2, 2.8), constrained_layout=True)
    _bar_panel(axes[0], rows, "distinct_1", "Distinct-1 diversity")
    _bar_panel(axes[1], rows, "mean_length", "Mean response length")
    path = outdir / f"{stem}_diversity.png"
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    written.append(path)
    return written


def render_metric_figure(
    report_dict: dict, outdir: str | Path, stem: str = "metrics"
) -> Path:
    """Single-system bar chart over the bounded metrics."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    keys = [
        k
        for k in ("bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge_l", "meteor_lite",
                  "cider", "distinct_1", "embedding_f1")
        if report_dict.get(k) is not None
    ]
    fig, ax = plt.subplots(figsize=(6.4, 2.8), constrained_layout=True)
    ax.bar(range(len(keys)), [report_dict[k] for k in keys], color="#4878a8")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=30, ha="right", fontsize=8)
    ax.tick_params(axis="y", labelsize=8)
    ax.grid(axis="y", alpha=0.3, linewidth=0.5)
    path = outdir / f"{stem}.png"
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
