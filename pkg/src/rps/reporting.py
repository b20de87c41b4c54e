"""Report rendering: aligned text tables, CSV/JSON files, and figures.

Figures are written with the Agg backend so report commands work on
headless boxes; every plot lands next to the delimited output so a
report directory is self-contained.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from enum import Enum
from pathlib import Path

from .errors import IoFailure
from .evaluation import ComparisonReport, EvalReport, LatencySummary
from .retriever import ThresholdReport

UNDEFINED = "undefined"


def fmt(value: object, places: int = 4) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, float):
        return f"{value:.{places}f}"
    return str(value)


def render_table(headers: list[str], rows: list[list[str]],
                 title: str | None = None) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i])
                               for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def write_csv(path: str | Path, headers: list[str], rows: list[list[str]]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(headers)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def to_jsonable(obj: object) -> object:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def write_json(path: str | Path, obj: object) -> None:
    try:
        Path(path).write_text(
            json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# -- table layouts -------------------------------------------------------------

def recall_rows(recalls: dict[str, dict[int, float]]) -> tuple[list[str], list[list[str]]]:
    """One row per system/backend, one Recall@k column per k."""
    ks = sorted({k for per_system in recalls.values() for k in per_system})
    headers = ["system"] + [f"recall@{k}" for k in ks]
    rows = [[label] + [fmt(per_system.get(k)) for k in ks]
            for label, per_system in recalls.items()]
    return headers, rows


def rates_rows(reports: dict[str, EvalReport]) -> tuple[list[str], list[list[str]]]:
    headers = ["system", "n", "accuracy", "hallucination_rate", "missing_rate",
               "similarity_mean", "consistency_mean"]
    rows = [[label, str(r.n), fmt(r.accuracy), fmt(r.hallucination_rate),
             fmt(r.missing_rate), fmt(r.similarity_mean), fmt(r.consistency_mean)]
            for label, r in reports.items()]
    return headers, rows


def latency_rows(latencies: dict[str, LatencySummary]) -> tuple[list[str], list[list[str]]]:
    headers = ["system", "p50_s", "p95_s", "p99_s"]
    rows = [[label, fmt(s.p50), fmt(s.p95), fmt(s.p99)]
            for label, s in latencies.items()]
    return headers, rows


def threshold_rows(report: ThresholdReport) -> tuple[list[str], list[list[str]]]:
    headers = ["metric", "value"]
    rows = [
        ["threshold", fmt(report.threshold, 2)],
        ["in_domain_queries", str(len(report.in_domain_scores))],
        ["out_of_domain_queries", str(len(report.out_domain_scores))],
        ["retrieval_rate", fmt(report.retrieval_rate)],
        ["no_retrieval_rate", fmt(report.no_retrieval_rate)],
    ]
    return headers, rows


def score_histogram_rows(report: ThresholdReport) -> tuple[list[str], list[list[str]]]:
    """Per-query top-1 scores; the raw data behind the separation plot."""
    headers = ["query_set", "top1_score"]
    rows = [["in_domain", fmt(s)] for s in report.in_domain_scores]
    rows += [["out_of_domain", fmt(s)] for s in report.out_domain_scores]
    return headers, rows


def comparison_rows(report: ComparisonReport) -> tuple[list[str], list[list[str]]]:
    headers = ["metric", "system_a", "system_b", "percent_diff"]
    rows = [[c.metric, fmt(c.value_a), fmt(c.value_b),
             UNDEFINED if c.percent_diff is None else f"{c.percent_diff:+.2f}%"]
            for c in report.metrics]
    return headers, rows


def significance_rows(report: ComparisonReport) -> tuple[list[str], list[list[str]]]:
    headers = ["metric", "t_statistic", "p_value"]
    rows = [[s.metric, fmt(s.statistic), fmt(s.p_value)]
            for s in report.significance]
    return headers, rows


# -- figures -------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def plot_score_histogram(report: ThresholdReport, path: str | Path) -> None:
    """Overlaid top-1 score histograms with the gate threshold marked."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bins = [i / 20 for i in range(21)]
    ax.hist(report.in_domain_scores, bins=bins, alpha=0.6, label="in-domain",
            color="tab:blue")
    ax.hist(report.out_domain_scores, bins=bins, alpha=0.6, label="out-of-domain",
            color="tab:orange")
    ax.axvline(report.threshold, color="tab:red", linestyle="--",
               label=f"threshold {report.threshold:.2f}")
    ax.set_xlabel("top-1 cosine score")
    ax.set_ylabel("queries")
    ax.set_title("Retrieval score separation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_recall_curve(recalls: dict[str, dict[int, float]], path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, per_system in recalls.items():
        ks = sorted(per_system)
        ax.plot(ks, [per_system[k] for k in ks], marker="o", label=label)
    ax.set_xlabel("k")
    ax.set_ylabel("recall@k")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Retrieval recall")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_latency_bars(latencies: dict[str, LatencySummary], path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = list(latencies)
    x = range(len(labels))
    width = 0.25
    for offset, (name, pick) in enumerate(
            [("p50", lambda s: s.p50), ("p95", lambda s: s.p95),
             ("p99", lambda s: s.p99)]):
        ax.bar([i + offset * width for i in x],
               [pick(latencies[label]) for label in labels],
               width=width, label=name)
    ax.set_xticks([i + width for i in x])
    ax.set_xticklabels(labels)
    ax.set_ylabel("seconds")
    ax.set_title("Latency percentiles")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_rates_bars(reports: dict[str, EvalReport], path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = list(reports)
    x = range(len(labels))
    width = 0.25
    for offset, (name, pick) in enumerate(
            [("accuracy", lambda r: r.accuracy),
             ("hallucination", lambda r: r.hallucination_rate),
             ("missing", lambda r: r.missing_rate)]):
        ax.bar([i + offset * width for i in x],
               [pick(reports[label]) for label in labels],
               width=width, label=name)
    ax.set_xticks([i + width for i in x])
    ax.set_xticklabels(labels)
    ax.set_ylabel("rate")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Judged outcome rates")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
