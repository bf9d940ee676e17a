"""Report rendering: delimited result tables plus matplotlib figures.

Wall-clock timings go to a separate sidecar so the main results table is
byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import csv
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import ExperimentResult, ImportanceReport

RESULTS_COLUMNS = ("model", "combo", "rmse_train", "rmse_test", "n_train", "n_test", "seed")


def write_results_table(results: Sequence[ExperimentResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.family,
                    r.combo_label,
                    repr(r.rmse_train) if r.rmse_train is not None else "",
                    repr(r.rmse_test) if r.rmse_test is not None else "",
                    r.n_train,
                    r.n_test,
                    r.seed,
                ]
            )


def write_timing_table(results: Sequence[ExperimentResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "combo", "wall_ms", "error"])
        for r in results:
            writer.writerow([r.family, r.combo_label, f"{r.wall_ms:.3f}", r.error or ""])


def render_rmse_figure(results: Sequence[ExperimentResult], path: str, seed: int = 0) -> None:
    """Grouped bar chart of test RMSE: one cluster per model family, one bar
    per data-source combination. Written as a static report file."""
    plt.rcParams["svg.hashsalt"] = str(seed)
    families = list(dict.fromkeys(r.family for r in results))
    combos = list(dict.fromkeys(r.combo_label for r in results))
    width = 0.8 / max(1, len(combos))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for ci, combo in enumerate(combos):
        xs, ys = [], []
        for fi, fam in enumerate(families):
            cell = next(
                (r for r in results if r.family == fam and r.combo_label == combo), None
            )
            if cell is None or cell.rmse_test is None:
                continue
            xs.append(fi + (ci - (len(combos) - 1) / 2.0) * width)
            ys.append(cell.rmse_test)
        ax.bar(xs, ys, width=width, label=combo)
    ax.set_xticks(range(len(families)))
    ax.set_xticklabels(families)
    ax.set_ylabel("test RMSE (minutes)")
    ax.set_title("Departure-delay RMSE by model and data sources")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_learning_curve(rows: Sequence[dict], table_path: str, figure_path: str, seed: int = 0) -> None:
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["train_days", "n_train", "rmse_test"])
        for row in rows:
            writer.writerow([row["train_days"], row["n_train"], repr(row["rmse_test"])])
    plt.rcParams["svg.hashsalt"] = str(seed)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["train_days"] for r in rows], [r["rmse_test"] for r in rows], marker="o")
    ax.set_xlabel("training days")
    ax.set_ylabel("test RMSE (minutes)")
    ax.set_title("Learning curve on the fixed chronological test set")
    fig.tight_layout()
    fig.savefig(figure_path)
    plt.close(fig)


def write_importance_tables(
    report: ImportanceReport, columns_path: str, groups_path: str
) -> None:
    with open(columns_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["column", "group", "delta_rmse"])
        for ci in sorted(report.columns, key=lambda c: -c.delta_rmse):
            writer.writerow([ci.column, ci.group, repr(ci.delta_rmse)])
    with open(groups_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "delta_rmse_sum"])
        for group, total in sorted(report.by_group().items(), key=lambda kv: -kv[1]):
            writer.writerow([group, repr(total)])


def render_importance_figure(
    report: ImportanceReport, path: str, top_n: int = 15, seed: int = 0
) -> None:
    plt.rcParams["svg.hashsalt"] = str(seed)
    ranked = sorted(report.columns, key=lambda c: c.delta_rmse)[-top_n:]
    fig, ax = plt.subplots(figsize=(7, 0.35 * max(4, len(ranked)) + 1.5))
    ax.barh([c.column for c in ranked], [c.delta_rmse for c in ranked])
    ax.set_xlabel("RMSE increase when permuted (minutes)")
    ax.set_title("Permutation feature importance")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
