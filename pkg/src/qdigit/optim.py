"""Training protocol pieces: loss, AdamW, clipping, LR plateau, early stop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


@dataclass
class LossConfig:
    alpha: float = 0.0      # label smoothing
    n_classes: int = 10

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("label smoothing must lie in [0, 1)")


@dataclass
class AdamWConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4


@dataclass
class SchedulerConfig:
    factor: float = 0.5
    patience: int = 5
    min_delta: float = 1e-4
    min_lr: float = 1e-5


@dataclass
class TrainState:
    lr: float
    n_params: int
    step: int = 0
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None
    best_val_loss: float = np.inf
    epochs_since_improve: int = 0
    plateau_best: float = np.inf
    plateau_count: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.adam_m is None:
            self.adam_m = np.zeros(self.n_params)
        if self.adam_v is None:
            self.adam_v = np.zeros(self.n_params)


def label_smoothed_ce(logits: np.ndarray, labels: np.ndarray, cfg: LossConfig):
    """Mean label-smoothed cross-entropy over the batch.

    Targets are (1 - alpha) on the true class plus alpha/K everywhere.
    Returns (loss, d_logits) with d_logits = (softmax - target) / B.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[1] != cfg.n_classes:
        raise ValueError(f"logits must be [B, {cfg.n_classes}]")
    if labels.min() < 0 or labels.max() >= cfg.n_classes:
        raise ValueError("label out of range")
    batch = logits.shape[0]

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    p = np.exp(log_p)

    targets = np.full_like(logits, cfg.alpha / cfg.n_classes)
    targets[np.arange(batch), labels] += 1.0 - cfg.alpha
    loss = float(-(targets * log_p).sum() / batch)
    d_logits = (p - targets) / batch
    return loss, d_logits


def adamw_step(params: np.ndarray, grads: np.ndarray, state: TrainState,
               hyper: AdamWConfig) -> np.ndarray:
    """One AdamW update with decoupled weight decay. Returns new params."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape or grads.shape != state.adam_m.shape:
        raise ValueError("parameter / gradient / moment length mismatch")
    if not np.all(np.isfinite(grads)):
        bad = int(np.count_nonzero(~np.isfinite(grads)))
        raise NumericError(
            f"aborting optimizer step: {bad} non-finite gradient entries "
            f"at step {state.step}")
    state.step += 1
    b1, b2 = hyper.beta1, hyper.beta2
    state.adam_m = b1 * state.adam_m + (1 - b1) * grads
    state.adam_v = b2 * state.adam_v + (1 - b2) * grads * grads
    m_hat = state.adam_m / (1 - b1 ** state.step)
    v_hat = state.adam_v / (1 - b2 ** state.step)
    # decoupled decay: shrink weights outside the adaptive update
    new = params * (1.0 - state.lr * hyper.weight_decay)
    new = new - state.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return new


def clip_grad_norm(grads: np.ndarray, max_norm: float = 1.0) -> np.ndarray:
    """Scale the whole gradient vector so its L2 norm never exceeds max_norm."""
    norm = float(np.linalg.norm(grads))
    if norm > max_norm:
        return grads * (max_norm / norm)
    return grads


def plateau_scheduler_step(state: TrainState, val_loss: float,
                           cfg: SchedulerConfig | None = None) -> TrainState:
    """ReduceLROnPlateau: halve lr after `patience` epochs without improvement."""
    cfg = cfg or SchedulerConfig()
    if val_loss < state.plateau_best - cfg.min_delta:
        state.plateau_best = val_loss
        state.plateau_count = 0
    else:
        state.plateau_count += 1
        if state.plateau_count > cfg.patience:
            state.lr = max(state.lr * cfg.factor, cfg.min_lr)
            state.plateau_count = 0
    return state


def early_stop_check(state: TrainState, val_loss: float,
                     patience: int = 20, min_delta: float = 1e-4) -> bool:
    """True once validation loss has stagnated for `patience` epochs."""
    if val_loss < state.best_val_loss - min_delta:
        state.best_val_loss = val_loss
        state.epochs_since_improve = 0
        return False
    state.epochs_since_improve += 1
    return state.epochs_since_improve >= patience
