"""Dataset discovery, stratified splitting and batch generation.

Directory layouts: pre-split ``root/{train,val,test}/<class>/image.png``
or flat ``root/<class>/image.png``; the flat form carries no split
assignment until :func:`stratified_split` runs. Class indices always
follow the lexicographic order of the class folder names.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .image_io import is_image_path, read_gray
from .preproc import OPERATORS, apply_operator

__all__ = [
    "SPLITS",
    "ManifestEntry",
    "DatasetManifest",
    "BatchPlan",
    "scan_dataset",
    "stratified_split",
    "batch_stream",
    "resize_bilinear",
]

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    class_index: int
    split: str  # "train" / "val" / "test", or "" before splitting


@dataclass
class DatasetManifest:
    root: str
    classes: list[str]
    entries: list[ManifestEntry]

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def counts(self) -> dict[str, dict[str, int]]:
        """Per-split, per-class entry counts (split "" = unassigned)."""
        table: dict[str, dict[str, int]] = {}
        for e in self.entries:
            row = table.setdefault(e.split, {name: 0 for name in self.classes})
            row[self.classes[e.class_index]] += 1
        return table

    def to_csv(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["path", "class", "split"])
            for e in self.entries:
                writer.writerow([e.path, self.classes[e.class_index], e.split])

    @classmethod
    def from_csv(cls, path: Path | str, root: str = "") -> "DatasetManifest":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["path", "class", "split"]:
                raise ValueError(f"unexpected manifest header {header}")
            rows = list(reader)
        classes = sorted({r[1] for r in rows})
        index = {name: i for i, name in enumerate(classes)}
        entries = [ManifestEntry(r[0], index[r[1]], r[2]) for r in rows]
        return cls(root=root, classes=classes, entries=entries)


@dataclass(frozen=True)
class BatchPlan:
    """How batches are produced: size, epochs, preprocessing, order."""

    batch_size: int
    epochs: int = 1
    preproc: str = "identity"
    preproc_params: dict = field(default_factory=dict)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.preproc not in OPERATORS:
            valid = ", ".join(sorted(OPERATORS))
            raise ValueError(
                f"unknown preprocessing operator {self.preproc!r}; valid: {valid}"
            )


def _decodable(path: Path) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except (UnidentifiedImageError, OSError, SyntaxError):
        return False


def _collect_class_dir(class_dir: Path, class_index: int, split: str) -> list[ManifestEntry]:
    entries = []
    files = sorted(p for p in class_dir.iterdir() if p.is_file() and is_image_path(p))
    for p in files:
        if _decodable(p):
            entries.append(ManifestEntry(str(p), class_index, split))
        else:
            log.warning("skipping undecodable image: %s", p)
    if not entries:
        log.warning("class folder has no decodable images: %s", class_dir)
    return entries


def scan_dataset(root: Path | str) -> DatasetManifest:
    """Build a manifest from a dataset directory.

    Honors an existing train/val/test layout; otherwise treats first-level
    directories as class folders with no split assigned. Undecodable files
    are skipped with a warning, empty class folders warn but do not fail.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root does not exist: {root}")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    split_dirs = [p for p in subdirs if p.name in SPLITS]

    if split_dirs:
        class_names = sorted(
            {c.name for s in split_dirs for c in s.iterdir() if c.is_dir()}
        )
        if not class_names:
            raise ValueError(f"no classes found under {root}")
        index = {name: i for i, name in enumerate(class_names)}
        entries: list[ManifestEntry] = []
        for split_dir in split_dirs:
            for class_dir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
                entries.extend(
                    _collect_class_dir(class_dir, index[class_dir.name], split_dir.name)
                )
    else:
        if not subdirs:
            raise ValueError(f"no classes found under {root}")
        class_names = [p.name for p in subdirs]
        entries = []
        for i, class_dir in enumerate(subdirs):
            entries.extend(_collect_class_dir(class_dir, i, ""))

    manifest = DatasetManifest(root=str(root), classes=class_names, entries=entries)
    for split, row in sorted(manifest.counts().items()):
        label = split or "(unsplit)"
        log.info("%s: %s", label, ", ".join(f"{k}={v}" for k, v in row.items()))
    return manifest


def stratified_split(
    manifest: DatasetManifest,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetManifest:
    """Assign train/val/test splits class by class.

    Within each class, entries are shuffled with the seeded generator and
    cut by the fractions; rounding remainders go to train. Each resulting
    split is then shuffled again so classes interleave. The output covers
    exactly the input entries.
    """
    fracs = tuple(float(f) for f in fractions)
    if len(fracs) != 3 or any(f <= 0 for f in fracs):
        raise ValueError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fracs)!r}")

    rng = np.random.default_rng(seed)
    buckets: dict[str, list[ManifestEntry]] = {s: [] for s in SPLITS}
    for ci, cname in enumerate(manifest.classes):
        pool = [e for e in manifest.entries if e.class_index == ci]
        n = len(pool)
        if n < len(SPLITS):
            raise ValueError(
                f"class {cname!r} has only {n} entries; need at least {len(SPLITS)}"
            )
        order = rng.permutation(n)
        n_val = math.floor(n * fracs[1])
        n_test = math.floor(n * fracs[2])
        n_train = n - n_val - n_test
        for rank, idx in enumerate(order):
            if rank < n_train:
                split = "train"
            elif rank < n_train + n_val:
                split = "val"
            else:
                split = "test"
            buckets[split].append(replace(pool[idx], split=split))

    entries: list[ManifestEntry] = []
    for split in SPLITS:
        mixed = [buckets[split][i] for i in rng.permutation(len(buckets[split]))]
        entries.extend(mixed)
    return DatasetManifest(root=manifest.root, classes=list(manifest.classes), entries=entries)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with half-pixel-centered coordinates.

    Input may be any real-valued 2D array; output is float64 of shape
    (out_h, out_w). Same-size inputs are returned as a copy.
    """
    src = np.asarray(img, dtype=np.float64)
    h, w = src.shape
    if (h, w) == (out_h, out_w):
        return src.copy()
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy


def batch_stream(
    manifest: DatasetManifest,
    split: str,
    plan: BatchPlan,
    target_size: tuple[int, int],
    epoch: int = 0,
):
    """Yield (images N x 1 x H x W float32 in [0,1], labels N) batches.

    One pass over the split per call; the visiting order reshuffles per
    (plan.seed, epoch). Images are decoded to gray, preprocessed with the
    plan's operator, bilinearly resized and scaled by 1/255. Entries that
    fail to decode mid-stream are skipped with a warning. The final short
    batch is emitted.
    """
    entries = manifest.split_entries(split)
    if not entries:
        raise ValueError(f"split {split!r} is empty")
    h, w = target_size
    order = np.arange(len(entries))
    if plan.shuffle:
        order = np.random.default_rng((plan.seed, epoch)).permutation(len(entries))

    for start in range(0, len(order), plan.batch_size):
        images = []
        labels = []
        for idx in order[start : start + plan.batch_size]:
            entry = entries[idx]
            try:
                img = read_gray(entry.path)
            except (UnidentifiedImageError, OSError, SyntaxError) as exc:
                log.warning("skipping %s: %s", entry.path, exc)
                continue
            img = apply_operator(plan.preproc, img, plan.preproc_params)
            arr = resize_bilinear(img, h, w) / 255.0
            images.append(arr.astype(np.float32))
            labels.append(entry.class_index)
        if images:
            batch = np.stack(images)[:, None, :, :]
            yield batch, np.asarray(labels, dtype=np.int64)
