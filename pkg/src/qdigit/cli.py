"""Command-line interface.

Subcommands: train, grid-search, eval, predict, inspect-params.
Configuration comes from an optional flat key=value file (--config) with
individual flags overriding file values. Exit codes: 0 success, 2 config
error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as qdata, gridsearch, metrics, plots
from .checkpoint import load_checkpoint
from .config import RunConfig, build_config
from .errors import ConfigError, DataError, NumericError
from .model import HybridModel
from .optim import LossConfig
from .train import train_loop

EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERIC_ERROR = 4

log = logging.getLogger(__name__)


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--data", help="dataset root (class-per-directory "
                        "tree, or an IDX image file with --labels)")
    parser.add_argument("--labels", help="IDX label file (with --data as the "
                        "IDX image file)")
    parser.add_argument("--lr", type=float)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--dropout-p", type=float, dest="dropout_p")
    parser.add_argument("--label-smoothing", type=float, dest="label_smoothing")
    parser.add_argument("--quantum-depth", type=int, dest="quantum_depth")
    parser.add_argument("--n-qubits", type=int, dest="n_qubits")
    parser.add_argument("--mode", choices=["quantum", "ablation"])
    parser.add_argument("--max-epochs", type=int, dest="max_epochs")
    parser.add_argument("--no-augment", action="store_const", const=False,
                        dest="augment")
    parser.add_argument("--no-hflip", action="store_const", const=False,
                        dest="augment_hflip")


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in ("seed", "data", "lr", "batch_size", "dropout_p",
                "label_smoothing", "quantum_depth", "n_qubits", "mode",
                "max_epochs", "augment", "augment_hflip"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return build_config(getattr(args, "config", None), overrides)


def _load_dataset(config: RunConfig, labels_path=None) -> qdata.Dataset:
    root = Path(config.resolve_data_root())
    if labels_path:
        return qdata.load_idx(root, labels_path)
    if root.is_dir():
        return qdata.load_image_dir(root)
    raise DataError(f"data path {root} is not a directory (for IDX input "
                    "pass the label file via --labels)")


def _write_eval_outputs(report, out_dir) -> None:
    paths = metrics.emit_report(report, out_dir)
    fig = plots.plot_confusion_matrix(report.matrix,
                                      Path(out_dir) / "confusion_matrix.png")
    log.info("wrote %s, %s, %s", paths["json"], paths["csv"], fig)


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    config = _config_from_args(args)
    dataset = _load_dataset(config, args.labels)
    train_set, val_set = qdata.stratified_split(
        dataset, qdata.SplitSpec(config.train_fraction, config.seed))
    out_dir = Path(args.out)
    result = train_loop(config, train_set, val_set, out_dir)

    if result.history:
        plots.plot_learning_curves(out_dir / "epochs.csv",
                                   out_dir / "learning_curves.png")
    model, _ = load_checkpoint(result.checkpoint_path)
    report = metrics.evaluate(model, val_set,
                              LossConfig(alpha=config.label_smoothing),
                              batch_size=config.batch_size)
    _write_eval_outputs(report, out_dir)
    print(json.dumps({
        "best_val_loss": result.best_val_loss,
        "best_val_acc": result.best_val_acc,
        "best_epoch": result.best_epoch,
        "epochs_run": result.epochs_run,
        "checkpoint": str(result.checkpoint_path),
    }, sort_keys=True))
    return 0


def cmd_grid_search(args) -> int:
    config = _config_from_args(args)
    if getattr(args, "n_qubits", None) is None:
        # the search protocol runs on the 4-qubit base model
        config = dataclasses.replace(config, n_qubits=4)
    dataset = _load_dataset(config, args.labels)
    train_set, val_set = qdata.stratified_split(
        dataset, qdata.SplitSpec(config.train_fraction, config.seed))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def train_fn(cell_cfg: RunConfig):
        result = train_loop(cell_cfg, train_set, val_set, out_dir=None)
        max_acc = max((row[4] for row in result.history), default=0.0)
        return max_acc, result.best_val_loss, result.epochs_run

    ranked = gridsearch.run_grid_search(config, train_fn,
                                        out_dir / "results.csv")
    for row in ranked:
        print(f"cell={row['cell']:2d} lr={row['lr']} B={row['batch_size']} "
              f"p={row['dropout_p']} alpha={row['label_smoothing']} "
              f"depth={row['quantum_depth']} "
              f"best_val_acc={row['best_val_acc']:.4f}")
    return 0


def cmd_eval(args) -> int:
    config = _config_from_args(args)
    model, header = load_checkpoint(args.checkpoint)
    dataset = _load_dataset(config, args.labels)
    alpha = header.get("extra", {}).get("label_smoothing",
                                        config.label_smoothing)
    report = metrics.evaluate(model, dataset, LossConfig(alpha=alpha),
                              batch_size=config.batch_size)
    _write_eval_outputs(report, args.out)
    print(json.dumps({"test_loss": report.test_loss,
                      "accuracy": report.accuracy,
                      "n_samples": report.n_samples}, sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    from PIL import Image
    try:
        with Image.open(args.image) as im:
            im = im.convert("L")
            if im.size != (qdata.IMAGE_SIZE, qdata.IMAGE_SIZE):
                im = im.resize((qdata.IMAGE_SIZE, qdata.IMAGE_SIZE),
                               Image.BILINEAR)
            pixels = np.asarray(im, dtype=np.float64) / 255.0
    except FileNotFoundError as exc:
        raise DataError(f"image {args.image} does not exist") from exc
    x = qdata.normalize(pixels)[None, None, :, :]
    probs = model.predict_proba(x)[0]
    print(json.dumps({"label": int(probs.argmax()),
                      "probabilities": probs.tolist()}))
    return 0


def cmd_inspect_params(args) -> int:
    if args.checkpoint:
        model, _ = load_checkpoint(args.checkpoint)
    else:
        config = _config_from_args(args)
        model = HybridModel(n_qubits=config.n_qubits,
                            depth=config.quantum_depth, mode=config.mode,
                            dropout_p=config.dropout_p, seed=config.seed)
    census = dict(model.param_census())
    census["n_qubits"] = model.n_qubits
    census["depth"] = model.depth
    census["mode"] = model.mode
    print(json.dumps(census, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdigit",
        description="Hybrid CNN + variational-quantum-circuit digit classifier")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", help="48-cell hyperparameter search")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify a single image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect-params", help="parameter census")
    _add_config_flags(p)
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_inspect_params)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
