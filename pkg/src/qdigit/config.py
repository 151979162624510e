"""Run configuration: a flat key-value bundle with file parsing and
CLI-flag overrides (flags win)."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

DATA_ROOT_ENV = "QDIGIT_DATA_ROOT"

GRID_AXES = [
    ("lr", [1e-3, 5e-4]),
    ("batch_size", [32, 64]),
    ("dropout_p", [0.0, 0.05]),
    ("label_smoothing", [0.0, 0.05]),
    ("quantum_depth", [3, 4, 5]),
]


@dataclass
class RunConfig:
    # optimization
    lr: float = 1e-3
    batch_size: int = 32
    dropout_p: float = 0.0
    label_smoothing: float = 0.05
    weight_decay: float = 1e-4
    max_grad_norm: float = 1.0
    # architecture
    quantum_depth: int = 5
    n_qubits: int = 10
    mode: str = "quantum"          # quantum | ablation
    # schedule
    max_epochs: int = 100
    early_stop_patience: int = 20
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    scheduler_min_delta: float = 1e-4
    scheduler_min_lr: float = 1e-5
    # data
    seed: int = 0
    data: str = ""
    train_fraction: float = 0.8
    augment: bool = True
    augment_rotate: bool = True
    augment_translate: bool = True
    augment_hflip: bool = True
    augment_elastic: bool = True

    def validate(self):
        if self.mode not in ("quantum", "ablation"):
            raise ConfigError(f"mode must be quantum or ablation, got {self.mode!r}")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("dropout_p must lie in [0, 1)")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError("label_smoothing must lie in [0, 1)")
        if self.quantum_depth < 1:
            raise ConfigError("quantum_depth must be >= 1")
        if not 2 <= self.n_qubits <= 12:
            raise ConfigError("n_qubits must lie in [2, 12]")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")
        return self

    def resolve_data_root(self) -> str:
        root = self.data or os.environ.get(DATA_ROOT_ENV, "")
        if not root:
            raise ConfigError(
                f"no data path given; set --data or ${DATA_ROOT_ENV}")
        return root


_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for config key {name!r}") from exc


def load_config_file(path) -> dict:
    """Parse a flat `key = value` file; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def build_config(file_path=None, overrides: dict | None = None) -> RunConfig:
    """File values first, then overrides (CLI flags) on top."""
    values = load_config_file(file_path) if file_path else {}
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return RunConfig(**values).validate()
