"""CSV tables and matplotlib figures for the reporting commands.

Every report command writes a delimited file and renders a figure next to
it; rendering always uses the Agg backend so it works headless.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_metrics(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_training_curve(metrics_csv, png_path) -> None:
    rows = read_metrics(metrics_csv)
    train_epochs = [int(r["epoch"]) for r in rows if r["split"] == "train"]
    train_loss = [float(r["loss"]) for r in rows if r["split"] == "train"]
    val_epochs = [int(r["epoch"]) for r in rows if r["split"] == "val" and r["r1"]]
    val_r1 = [float(r["r1"]) for r in rows if r["split"] == "val" and r["r1"]]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(train_epochs, train_loss, marker="o", markersize=3, label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    if val_r1:
        ax2 = ax.twinx()
        ax2.plot(val_epochs, val_r1, marker="s", markersize=3, color="tab:orange",
                 label="val R-1")
        ax2.set_ylabel("val R-1 F1")
    ax.legend(loc="best")
    ax.set_title("training curve")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_k_sweep(png_path, ks: list[int], r1: list[float]) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(ks, r1, marker="o")
    ax.set_xlabel("selected sentences (K)")
    ax.set_ylabel("mean R-1 F1")
    ax.set_xticks(ks)
    ax.set_title("ROUGE-1 vs. number of selected sentences")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_score_histogram(png_path, r1_values: list[float]) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(r1_values, bins=20, range=(0.0, 1.0), color="tab:blue", alpha=0.8)
    ax.set_xlabel("per-document R-1 F1")
    ax.set_ylabel("documents")
    ax.set_title("evaluation score distribution")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_ablation(png_path, names: list[str], param_counts: list[int],
                    r1: list[float | None]) -> None:
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(names) + 2))
    y = range(len(names))
    if any(v is not None for v in r1):
        ax.barh(list(y), [0.0 if v is None else v for v in r1], color="tab:green", alpha=0.8)
        ax.set_xlabel("mean R-1 F1")
    else:
        ax.barh(list(y), param_counts, color="tab:blue", alpha=0.8)
        ax.set_xlabel("parameter count")
    ax.set_yticks(list(y))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_title("ablation variants")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
