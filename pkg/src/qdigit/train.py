"""Training loop: augmented train pass, validation pass, plateau schedule,
early stopping, best-checkpoint retention, CSV epoch log."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as qdata, optim
from .checkpoint import save_checkpoint
from .config import RunConfig
from .metrics import evaluate
from .model import HybridModel
from .optim import AdamWConfig, LossConfig, SchedulerConfig, TrainState

log = logging.getLogger(__name__)

EPOCH_LOG_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr"]


@dataclass
class TrainResult:
    model: HybridModel
    best_val_loss: float
    best_val_acc: float
    best_epoch: int
    epochs_run: int
    history: list            # rows matching EPOCH_LOG_COLUMNS
    checkpoint_path: Path | None


def _augment_cfg(config: RunConfig) -> qdata.AugmentConfig | None:
    if not config.augment:
        return None
    return qdata.AugmentConfig(
        enable_rotate=config.augment_rotate,
        enable_translate=config.augment_translate,
        enable_hflip=config.augment_hflip,
        enable_elastic=config.augment_elastic,
    )


def train_loop(config: RunConfig, train_set: qdata.Dataset,
               val_set: qdata.Dataset, out_dir=None) -> TrainResult:
    """Run the full protocol; writes epochs.csv and model.ckpt when
    `out_dir` is given. Deterministic for a fixed (config, data)."""
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    model = HybridModel(n_qubits=config.n_qubits, depth=config.quantum_depth,
                        mode=config.mode, dropout_p=config.dropout_p,
                        seed=config.seed)
    params = model.param_vector()
    state = TrainState(lr=config.lr, n_params=params.size)
    adamw = AdamWConfig(lr=config.lr, weight_decay=config.weight_decay)
    loss_cfg = LossConfig(alpha=config.label_smoothing)
    sched_cfg = SchedulerConfig(
        factor=config.scheduler_factor, patience=config.scheduler_patience,
        min_delta=config.scheduler_min_delta, min_lr=config.scheduler_min_lr)
    aug_cfg = _augment_cfg(config)

    history = []
    best_val_loss = np.inf
    best_val_acc = 0.0
    best_epoch = -1
    ckpt_path = out_dir / "model.ckpt" if out_dir is not None else None
    extra = {"seed": config.seed, "label_smoothing": config.label_smoothing}
    if ckpt_path is not None:
        # max_epochs=0 still leaves a usable initial-weights checkpoint
        save_checkpoint(ckpt_path, model, extra)

    epochs_run = 0
    for epoch in range(config.max_epochs):
        epoch_loss = 0.0
        epoch_correct = 0
        n_seen = 0
        for batch_i, (x, y, _) in enumerate(qdata.batches(
                train_set, config.batch_size, config.seed, epoch, aug_cfg)):
            drop_rng = np.random.default_rng([config.seed, epoch, batch_i, 7])
            logits = model.forward_batch(x, training=True, rng=drop_rng)
            loss, d_logits = optim.label_smoothed_ce(logits, y, loss_cfg)
            grads = model.backward(d_logits)
            grads = optim.clip_grad_norm(grads, config.max_grad_norm)
            adamw.lr = state.lr
            params = optim.adamw_step(params, grads, state, adamw)
            model.set_param_vector(params)
            epoch_loss += loss * len(y)
            epoch_correct += int((logits.argmax(axis=1) == y).sum())
            n_seen += len(y)

        train_loss = epoch_loss / max(n_seen, 1)
        train_acc = epoch_correct / max(n_seen, 1)
        val_report = evaluate(model, val_set, loss_cfg,
                              batch_size=config.batch_size)
        row = [epoch, train_loss, train_acc,
               val_report.test_loss, val_report.accuracy, state.lr]
        history.append(row)
        epochs_run = epoch + 1
        log.info("epoch %d train_loss=%.4f train_acc=%.4f val_loss=%.4f "
                 "val_acc=%.4f lr=%.2e", epoch, train_loss, train_acc,
                 val_report.test_loss, val_report.accuracy, state.lr)

        if val_report.test_loss < best_val_loss:
            best_val_loss = val_report.test_loss
            best_val_acc = val_report.accuracy
            best_epoch = epoch
            if ckpt_path is not None:
                save_checkpoint(ckpt_path, model, extra)

        optim.plateau_scheduler_step(state, val_report.test_loss, sched_cfg)
        if optim.early_stop_check(state, val_report.test_loss,
                                  patience=config.early_stop_patience,
                                  min_delta=config.scheduler_min_delta):
            log.info("early stop after epoch %d", epoch)
            break

    if out_dir is not None:
        write_epoch_log(out_dir / "epochs.csv", history)

    return TrainResult(model=model, best_val_loss=float(best_val_loss),
                       best_val_acc=float(best_val_acc), best_epoch=best_epoch,
                       epochs_run=epochs_run, history=history,
                       checkpoint_path=ckpt_path)


def write_epoch_log(path, history):
    """CSV with a fixed column order; floats via repr for byte stability."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPOCH_LOG_COLUMNS)
        for epoch, tl, ta, vl, va, lr in history:
            writer.writerow([epoch, repr(tl), repr(ta), repr(vl), repr(va),
                             repr(lr)])
