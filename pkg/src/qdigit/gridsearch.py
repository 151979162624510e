"""Hyperparameter grid search over the 4-qubit base model.

Axes (lexicographic enumeration order):
    lr {1e-3, 5e-4} x batch_size {32, 64} x dropout_p {0, 0.05}
    x label_smoothing {0, 0.05} x quantum_depth {3, 4, 5}  -> 48 cells

Completed cells recorded in the results CSV are skipped on re-invocation,
so an interrupted search resumes where it left off.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import logging
from pathlib import Path

from .config import GRID_AXES, RunConfig

log = logging.getLogger(__name__)

RESULTS_COLUMNS = ["cell", "lr", "batch_size", "dropout_p", "label_smoothing",
                   "quantum_depth", "best_val_acc", "best_val_loss",
                   "epochs_run"]


def enumerate_cells(base: RunConfig):
    """All 48 grid configurations, in deterministic lexicographic order."""
    names = [name for name, _ in GRID_AXES]
    for cell, combo in enumerate(itertools.product(
            *(values for _, values in GRID_AXES))):
        cfg = dataclasses.replace(base, **dict(zip(names, combo)))
        yield cell, cfg


def _cell_key(cfg: RunConfig) -> tuple:
    return (repr(cfg.lr), str(cfg.batch_size), repr(cfg.dropout_p),
            repr(cfg.label_smoothing), str(cfg.quantum_depth))


def _load_done(results_csv: Path) -> dict:
    done = {}
    if results_csv.is_file():
        with results_csv.open() as fh:
            for row in csv.DictReader(fh):
                key = (row["lr"], row["batch_size"], row["dropout_p"],
                       row["label_smoothing"], row["quantum_depth"])
                done[key] = row
    return done


def run_grid_search(base: RunConfig, train_fn, results_csv) -> list:
    """Train every pending cell and return all rows ranked by best
    validation accuracy (descending, cell index breaking ties).

    `train_fn(config) -> (best_val_acc, best_val_loss, epochs_run)` is
    injectable so tests can rank without real training.
    """
    results_csv = Path(results_csv)
    results_csv.parent.mkdir(parents=True, exist_ok=True)
    done = _load_done(results_csv)

    write_header = not results_csv.is_file()
    rows = []
    with results_csv.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(RESULTS_COLUMNS)
            fh.flush()
        for cell, cfg in enumerate_cells(base):
            key = _cell_key(cfg)
            if key in done:
                log.info("cell %d already recorded; skipping", cell)
                prev = done[key]
                rows.append({**prev, "cell": int(prev["cell"]),
                             "best_val_acc": float(prev["best_val_acc"]),
                             "best_val_loss": float(prev["best_val_loss"])})
                continue
            acc, loss, epochs = train_fn(cfg)
            record = {
                "cell": cell,
                "lr": repr(cfg.lr),
                "batch_size": str(cfg.batch_size),
                "dropout_p": repr(cfg.dropout_p),
                "label_smoothing": repr(cfg.label_smoothing),
                "quantum_depth": str(cfg.quantum_depth),
                "best_val_acc": float(acc),
                "best_val_loss": float(loss),
                "epochs_run": epochs,
            }
            writer.writerow([record[c] for c in RESULTS_COLUMNS])
            fh.flush()
            rows.append(record)

    rows.sort(key=lambda r: (-r["best_val_acc"], r["cell"]))
    return rows
