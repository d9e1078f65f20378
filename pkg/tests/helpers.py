"""Shared fixtures: synthetic images and dataset trees."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from cxrnet.image_io import write_png

PATTERN_KINDS = ("checker", "disc", "hstripe", "vstripe")


def random_image(rng: np.random.Generator, h: int = 16, w: int = 16) -> np.ndarray:
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


def ramp_image() -> np.ndarray:
    """16x16 image containing every intensity 0..255 exactly once."""
    return np.arange(256, dtype=np.uint8).reshape(16, 16)


def make_pattern(kind: str, rng: np.random.Generator, side: int = 64) -> np.ndarray:
    """One noisy image of a strongly class-specific pattern."""
    yy, xx = np.mgrid[0:side, 0:side]
    if kind == "disc":
        cy, cx = rng.integers(side // 3, side - side // 3, 2)
        r = rng.integers(side // 6, side // 4)
        img = np.where((yy - cy) ** 2 + (xx - cx) ** 2 <= r * r, 220, 40)
    elif kind == "hstripe":
        img = np.where(((yy + rng.integers(0, 16)) // 8) % 2 == 0, 220, 40)
    elif kind == "vstripe":
        img = np.where(((xx + rng.integers(0, 16)) // 8) % 2 == 0, 220, 40)
    elif kind == "checker":
        phase = rng.integers(0, 16)
        img = np.where(((yy + phase) // 8 + (xx + phase) // 8) % 2 == 0, 220, 40)
    else:
        raise ValueError(f"unknown pattern kind {kind!r}")
    noisy = img + rng.integers(-20, 21, img.shape)
    return np.clip(noisy, 0, 255).astype(np.uint8)


def build_synthetic_dataset(
    root: Path | str,
    seed: int = 42,
    n_train: int = 10,
    n_val: int = 2,
    n_test: int = 0,
    side: int = 64,
) -> Path:
    """Write a pre-split PNG tree with one folder per pattern class."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for split, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        for kind in PATTERN_KINDS:
            for i in range(n):
                write_png(root / split / kind / f"{kind}_{i:02d}.png",
                          make_pattern(kind, rng, side))
    return root


def build_flat_dataset(
    root: Path | str, seed: int = 0, per_class: int = 10, side: int = 24
) -> Path:
    """Write a flat (unsplit) PNG tree of random images per class."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for kind in PATTERN_KINDS:
        for i in range(per_class):
            write_png(root / kind / f"{kind}_{i:02d}.png", random_image(rng, side, side))
    return root
