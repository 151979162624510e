"""Test-set evaluation: loss, accuracy, per-class precision/recall/F1,
confusion matrix, and report files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as qdata
from .errors import DataError
from .optim import LossConfig, label_smoothed_ce

REPORT_SCHEMA_VERSION = 1
N_CLASSES = 10


@dataclass
class MetricsReport:
    test_loss: float
    accuracy: float
    per_class: list          # 10 dicts: precision / recall / f1 / support
    matrix: np.ndarray       # [10, 10] counts, rows = true, cols = predicted
    n_samples: int
    loss_alpha: float


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray,
                     n_classes: int = N_CLASSES) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("label arrays must match in length")
    mat = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(mat, (y_true, y_pred), 1)
    return mat


def per_class_prf(mat: np.ndarray):
    """Per-class (precision, recall, f1, support) from a confusion matrix.

    A zero denominator yields 0 for that metric and flags the class.
    """
    mat = np.asarray(mat)
    out = []
    for k in range(mat.shape[0]):
        tp = int(mat[k, k])
        fp = int(mat[:, k].sum()) - tp
        fn = int(mat[k, :].sum()) - tp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        out.append({
            "class": k,
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp + fn,
            "degenerate": tp + fp == 0 or tp + fn == 0,
        })
    return out


def evaluate(model, dataset: qdata.Dataset, loss_cfg: LossConfig,
             batch_size: int = 64) -> MetricsReport:
    """Eval-mode pass over a dataset (normalization only, no augmentation)."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    preds = np.empty(len(dataset), dtype=np.int64)
    total_loss = 0.0
    for start in range(0, len(dataset), batch_size):
        sl = slice(start, start + batch_size)
        x = qdata.normalize(dataset.images[sl])[:, None, :, :]
        y = dataset.labels[sl]
        logits = model.forward_batch(x, training=False)
        loss, _ = label_smoothed_ce(logits, y, loss_cfg)
        total_loss += loss * len(y)
        preds[sl] = logits.argmax(axis=1)
    mat = confusion_matrix(dataset.labels, preds)
    return MetricsReport(
        test_loss=total_loss / len(dataset),
        accuracy=float(np.trace(mat)) / len(dataset),
        per_class=per_class_prf(mat),
        matrix=mat,
        n_samples=len(dataset),
        loss_alpha=loss_cfg.alpha,
    )


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "test_loss": report.test_loss,
        "accuracy": report.accuracy,
        "n_samples": report.n_samples,
        "loss_alpha": report.loss_alpha,
        "per_class": report.per_class,
        "confusion_matrix": report.matrix.tolist(),
    }


def report_from_dict(d: dict) -> MetricsReport:
    return MetricsReport(
        test_loss=d["test_loss"],
        accuracy=d["accuracy"],
        per_class=d["per_class"],
        matrix=np.asarray(d["confusion_matrix"], dtype=np.int64),
        n_samples=d["n_samples"],
        loss_alpha=d["loss_alpha"],
    )


def emit_report(report: MetricsReport, out_dir) -> dict:
    """Write report.json plus a per-class CSV; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    json_path.write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    csv_path = out_dir / "per_class.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "precision", "recall", "f1", "support"])
        for row in report.per_class:
            writer.writerow([row["class"], repr(row["precision"]),
                             repr(row["recall"]), repr(row["f1"]),
                             row["support"]])
    return {"json": json_path, "csv": csv_path}
