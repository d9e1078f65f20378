"""Command-line entry points: ``preprocess``, ``train``, ``eval``, ``split``.

Commands are thin wrappers over the library; every run writes its full
effective configuration next to its outputs so it can be replayed
verbatim. Diagnostics go to stderr, data to files and stdout.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import persistence
from .config import ConfigError, RunConfig
from .data import BatchPlan, DatasetManifest, batch_stream, scan_dataset, stratified_split
from .image_io import is_image_path, read_gray, write_png
from .metrics import (
    confusion,
    macro_report,
    precision_recall_f1,
    report_csv,
    roc_auc,
    roc_csv,
    roc_svg,
)
from .model import Network, build_proposed_cnn, train_epoch
from .nn import Adam
from .preproc import OPERATORS, apply_operator, local_ternary_pattern

__all__ = ["cmd_preprocess", "cmd_train", "cmd_eval", "cmd_split", "main"]

log = logging.getLogger(__name__)

CLI_OPERATORS = sorted(set(OPERATORS) | {"ltp"})


def _iter_inputs(input_path: Path):
    if input_path.is_file():
        yield input_path, input_path.name
    elif input_path.is_dir():
        for p in sorted(input_path.rglob("*")):
            if p.is_file() and is_image_path(p):
                yield p, str(p.relative_to(input_path))
    else:
        raise FileNotFoundError(f"input does not exist: {input_path}")


def cmd_preprocess(
    input_path: Path | str,
    operator: str,
    params: dict,
    out_dir: Path | str,
) -> list[tuple[str, str]]:
    """Apply one operator to a file or an image tree, mirroring the layout.

    Returns (input, output) pairs; "ltp" emits two outputs per input with
    ``_upper`` / ``_lower`` suffixes. A ``preprocess_manifest.csv`` listing
    the pairs is written into the output directory.
    """
    if operator not in CLI_OPERATORS:
        raise ValueError(
            f"unknown operator {operator!r}; valid: {', '.join(CLI_OPERATORS)}"
        )
    out_dir = Path(out_dir)
    written: list[tuple[str, str]] = []
    for src, rel in _iter_inputs(Path(input_path)):
        img = read_gray(src)
        rel_png = Path(rel).with_suffix(".png")
        if operator == "ltp":
            maps = local_ternary_pattern(img, **params)
            for suffix, data in (("upper", maps.upper), ("lower", maps.lower)):
                dst = out_dir / rel_png.with_stem(f"{rel_png.stem}_{suffix}")
                write_png(dst, data)
                written.append((str(src), str(dst)))
        else:
            result = apply_operator(operator, img, params)
            dst = out_dir / rel_png
            write_png(dst, result)
            written.append((str(src), str(dst)))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "preprocess_manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["input", "output"])
        writer.writerows(written)
    log.info("preprocessed %d outputs with %r into %s", len(written), operator, out_dir)
    return written


def _load_manifest(cfg: RunConfig) -> DatasetManifest:
    if not cfg.dataset_root:
        raise ConfigError("config key dataset.root: required for this command")
    manifest = scan_dataset(cfg.dataset_root)
    if any(e.split == "" for e in manifest.entries):
        manifest = stratified_split(manifest, cfg.fractions, cfg.seed)
    return manifest


def _split_accuracy(
    net: Network, manifest: DatasetManifest, split: str, cfg: RunConfig
) -> float:
    if not manifest.split_entries(split):
        return math.nan
    plan = BatchPlan(
        batch_size=cfg.batch_size,
        preproc=cfg.preproc_name,
        preproc_params=cfg.preproc_params,
        seed=cfg.seed,
        shuffle=False,
    )
    correct = 0
    total = 0
    for x, labels in batch_stream(manifest, split, plan, (cfg.input_size, cfg.input_size)):
        correct += int((net.predict(x) == labels).sum())
        total += labels.size
    return correct / total if total else math.nan


def _fmt_cell(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def cmd_train(cfg: RunConfig) -> dict[str, Path]:
    """Scan, split, stream and train; write checkpoints, log, config echo."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_echo(out / "effective_config.json")

    manifest = _load_manifest(cfg)
    if len(manifest.classes) != cfg.num_classes:
        raise ConfigError(
            f"config key model.num_classes: dataset has {len(manifest.classes)} "
            f"classes, config says {cfg.num_classes}"
        )
    spec = build_proposed_cnn(
        (1, cfg.input_size, cfg.input_size), cfg.num_classes, cfg.width_divisor
    )
    net = Network.from_spec(spec, seed=cfg.seed)
    persistence.save(net, out / "model_init.ckpt")

    optimizer = Adam(lr=cfg.lr)
    plan = BatchPlan(
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        preproc=cfg.preproc_name,
        preproc_params=cfg.preproc_params,
        seed=cfg.seed,
        shuffle=True,
    )
    log_path = out / "training_log.csv"
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "mean_loss", "val_accuracy"])
        for epoch in range(cfg.epochs):
            batches = batch_stream(
                manifest, "train", plan, (cfg.input_size, cfg.input_size), epoch
            )
            mean_loss = train_epoch(net, batches, optimizer)
            val_acc = _split_accuracy(net, manifest, "val", cfg)
            writer.writerow([epoch, repr(mean_loss), _fmt_cell(val_acc)])
            log.info("epoch %d: loss %.6f val_acc %s", epoch, mean_loss,
                     "n/a" if math.isnan(val_acc) else f"{val_acc:.4f}")
    ckpt = out / "model.ckpt"
    persistence.save(net, ckpt)
    return {
        "checkpoint": ckpt,
        "initial_checkpoint": out / "model_init.ckpt",
        "training_log": log_path,
        "config_echo": out / "effective_config.json",
    }


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def cmd_eval(
    checkpoint: Path | str, cfg: RunConfig, split: str = "test"
) -> dict[str, Path]:
    """Run inference over one split and export the per-class metric table
    plus a ROC CSV and self-contained SVG per class."""
    net = persistence.load(checkpoint)
    k = net.spec.num_classes
    manifest = _load_manifest(cfg)
    if len(manifest.classes) != k:
        raise ValueError(
            f"checkpoint expects {k} classes, dataset has {len(manifest.classes)}"
        )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_echo(out / "effective_config.json")

    plan = BatchPlan(
        batch_size=cfg.batch_size,
        preproc=cfg.preproc_name,
        preproc_params=cfg.preproc_params,
        seed=cfg.seed,
        shuffle=False,
    )
    probs_parts = []
    label_parts = []
    size = net.spec.input_size[1], net.spec.input_size[2]
    for x, labels in batch_stream(manifest, split, plan, size):
        probs_parts.append(net.forward(x))
        label_parts.append(labels)
    probs = np.concatenate(probs_parts)
    labels = np.concatenate(label_parts)
    preds = probs.argmax(axis=1)

    cm = confusion(preds, labels, k)
    report = precision_recall_f1(cm)
    curves = []
    for c in range(k):
        binary = (labels == c).astype(np.int64)
        if binary.min() == binary.max():
            log.warning("class %s: AUC undefined (single-class labels)", manifest.classes[c])
            curves.append(None)
        else:
            curves.append(roc_auc(probs[:, c], binary))

    paths = {"metrics": out / "metrics.csv"}
    table = report_csv(manifest.classes, report, curves, paths["metrics"])
    sys.stdout.write(table)
    for c, curve in enumerate(curves):
        if curve is None:
            continue
        name = _safe_name(manifest.classes[c])
        roc_csv(curve, manifest.classes[c], out / f"roc_{name}.csv")
        roc_svg(curve, manifest.classes[c], out / f"roc_{name}.svg")
        paths[f"roc_{name}"] = out / f"roc_{name}.csv"
    macro = macro_report(report, curves)
    log.info(
        "macro precision %.4f recall %.4f f1 %.4f",
        macro.precision, macro.recall, macro.f1,
    )
    return paths


def cmd_split(cfg: RunConfig) -> Path:
    """Scan (and stratify, if the layout is flat) and export the manifest."""
    manifest = _load_manifest(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_echo(out / "effective_config.json")
    path = out / "manifest.csv"
    manifest.to_csv(path)
    for split, row in sorted(manifest.counts().items()):
        sys.stdout.write(
            f"{split}: " + ", ".join(f"{k}={v}" for k, v in row.items()) + "\n"
        )
    return path


def _operator_params(args: argparse.Namespace) -> dict:
    params = {}
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.beta is not None:
        params["beta"] = args.beta
    if args.t is not None:
        params["t"] = args.t
    if args.block is not None:
        params["block"] = args.block
    if args.c is not None:
        params["c"] = args.c
    return params


def _config_with_overrides(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cxrnet",
        description="Chest X-ray preprocessing, training and evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="apply one preprocessing operator to images")
    p.add_argument("--input", required=True, help="image file or directory tree")
    p.add_argument("--operator", required=True, help=f"one of: {', '.join(CLI_OPERATORS)}")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--alpha", type=float, help="contrast factor (augment)")
    p.add_argument("--beta", type=float, help="brightness offset (augment)")
    p.add_argument("--t", type=int, help="band half-width (ltp variants)")
    p.add_argument("--block", type=int, help="window side (threshold/hybrid)")
    p.add_argument("--c", type=float, help="mean offset (threshold/hybrid)")

    for name, help_text in (
        ("train", "train the network from a JSON config"),
        ("eval", "evaluate a checkpoint on a dataset split"),
        ("split", "scan a dataset and export the split manifest CSV"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override train.seed")
        p.add_argument("--out", help="override output.dir")
        if name == "eval":
            p.add_argument("--checkpoint", required=True, help="checkpoint file")
            p.add_argument("--split", default="test", choices=["train", "val", "test"])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "preprocess":
            cmd_preprocess(args.input, args.operator, _operator_params(args), args.out)
        elif args.command == "train":
            cmd_train(_config_with_overrides(args))
        elif args.command == "eval":
            cmd_eval(args.checkpoint, _config_with_overrides(args), args.split)
        elif args.command == "split":
            cmd_split(_config_with_overrides(args))
    except (
        ConfigError,
        persistence.CheckpointError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
