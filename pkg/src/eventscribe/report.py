"""Evaluation report rendering.

``write_report`` materializes an EvalReport as machine-readable JSON, a
delimited per-pair CSV, an aligned text table, and matplotlib figures
(aggregate bars plus per-metric distributions) saved next to the data files.
Scorecard comparisons render as a separate figure.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import EvalReport, ScoreCard


def aligned_table(report: EvalReport) -> str:
    """Fixed-width table: one row per pair plus the aggregate row."""
    headers = ["pair", *report.metrics]
    rows = [
        [str(i), *(f"{row[m]:.4f}" for m in report.metrics)]
        for i, row in enumerate(report.per_pair)
    ]
    rows.append(["mean*", *(f"{report.aggregates[m]:.4f}" for m in report.metrics)])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.append("(*aggregates on the 0-100 table scale; perplexity unscaled)")
    return "\n".join(lines)


def _write_csv(report: EvalReport, path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pair", *report.metrics])
        for i, row in enumerate(report.per_pair):
            writer.writerow([i, *(row[m] for m in report.metrics)])
        writer.writerow(["mean", *(report.aggregates[m] for m in report.metrics)])


def _aggregate_figure(report: EvalReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(report.metrics)
    values = [report.aggregates[m] for m in names]
    ax.bar(names, values, color="#2c7fb8")
    ax.set_ylabel("aggregate (table scale)")
    ax.set_title("Corpus aggregates")
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.2f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _distribution_figure(report: EvalReport, path: Path) -> None:
    n = len(report.metrics)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.2), squeeze=False)
    for ax, metric in zip(axes[0], report.metrics):
        values = [row[metric] for row in report.per_pair]
        ax.hist(values, bins=min(20, max(5, len(values) // 3)), color="#41ab5d")
        ax.set_title(metric, fontsize=9)
        ax.tick_params(labelsize=7)
    fig.suptitle("Per-pair metric distributions", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(report: EvalReport, out_json: str | Path) -> dict[str, Path]:
    """Write report.json plus CSV, text table, and figures beside it.

    Returns the paths written, keyed by artifact name.
    """
    out_json = Path(out_json)
    out_json.parent.mkdir(parents=True, exist_ok=True)
    stem = out_json.with_suffix("")
    paths = {
        "json": out_json,
        "csv": stem.with_suffix(".csv"),
        "table": stem.with_suffix(".txt"),
        "aggregates_png": Path(f"{stem}_aggregates.png"),
        "distributions_png": Path(f"{stem}_distributions.png"),
    }
    out_json.write_text(json.dumps(report.to_dict(), indent=1), "utf-8")
    _write_csv(report, paths["csv"])
    paths["table"].write_text(aligned_table(report) + "\n", "utf-8")
    _aggregate_figure(report, paths["aggregates_png"])
    _distribution_figure(report, paths["distributions_png"])
    return paths


def write_scorecard_figure(cards: Sequence[ScoreCard], path: str | Path) -> Path:
    """Grouped comparison of scorecard factors plus totals, lower is better."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    factor_names = [name for name, _ in cards[0].factors]
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / max(len(cards), 1)
    for idx, card in enumerate(cards):
        offsets = [i + idx * width for i in range(len(factor_names))]
        ax.bar(offsets, [score for _, score in card.factors], width,
               label=f"{card.name} (total {card.total})")
    ax.set_xticks([i + width * (len(cards) - 1) / 2 for i in range(len(factor_names))])
    ax.set_xticklabels(factor_names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("ordinal score (lower is better)")
    ax.set_title("Approach comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_run_summary(summary_doc: dict, out_json: str | Path) -> dict[str, Path]:
    """Replay/run summary as JSON plus a terminal-state bar figure."""
    out_json = Path(out_json)
    out_json.parent.mkdir(parents=True, exist_ok=True)
    out_json.write_text(json.dumps(summary_doc, indent=1), "utf-8")
    fig_path = Path(f"{out_json.with_suffix('')}_states.png")
    counts = summary_doc.get("terminal_counts", {})
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(list(counts), list(counts.values()), color="#e6550d")
    ax.set_ylabel("events")
    ax.set_title(
        f"Terminal states (lost={summary_doc.get('lost', 0)}, "
        f"p95={summary_doc.get('latency_p95', 0):.3f}s)"
    )
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return {"json": out_json, "states_png": fig_path}


def load_pairs_file(path: str | Path) -> list:
    """Pairs file: JSON list of {generated, reference, [logprobs]} or JSONL."""
    from .metrics import TextPair, TokenLogProbs

    text = Path(path).read_text("utf-8").strip()
    if not text:
        return []
    if text.startswith("["):
        records = json.loads(text)
    else:
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
    pairs = []
    for record in records:
        logprobs = None
        if record.get("logprobs") is not None:
            lp = record["logprobs"]
            logprobs = TokenLogProbs(tuple(lp["tokens"]), tuple(lp["logprobs"]))
        pairs.append(
            TextPair(
                generated=record["generated"],
                reference=record["reference"],
                logprobs=logprobs,
            )
        )
    return pairs
