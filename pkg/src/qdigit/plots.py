"""Figure rendering for the report path: learning curves and the
confusion-matrix heatmap, written as PNG files next to the CSV/JSON output."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_learning_curves(epoch_log_csv, out_png) -> Path:
    """Loss and accuracy curves from an epochs.csv training log."""
    epochs, tl, ta, vl, va = [], [], [], [], []
    with Path(epoch_log_csv).open() as fh:
        for row in csv.DictReader(fh):
            epochs.append(int(row["epoch"]))
            tl.append(float(row["train_loss"]))
            ta.append(float(row["train_acc"]))
            vl.append(float(row["val_loss"]))
            va.append(float(row["val_acc"]))

    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, tl, label="train")
    ax_loss.plot(epochs, vl, label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_acc.plot(epochs, ta, label="train")
    ax_acc.plot(epochs, va, label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.legend()
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def plot_confusion_matrix(matrix, out_png) -> Path:
    """Heatmap of a [10, 10] confusion matrix (rows true, cols predicted)."""
    matrix = np.asarray(matrix)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(matrix, cmap="Blues")
    fig.colorbar(im, ax=ax)
    n = matrix.shape[0]
    ax.set_xticks(range(n))
    ax.set_yticks(range(n))
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    threshold = matrix.max() / 2 if matrix.max() > 0 else 0.5
    for i in range(n):
        for j in range(n):
            ax.text(j, i, str(matrix[i, j]), ha="center", va="center",
                    color="white" if matrix[i, j] > threshold else "black",
                    fontsize=7)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png
