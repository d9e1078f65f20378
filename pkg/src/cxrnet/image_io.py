"""Reading and writing 8-bit images.

Accepts grayscale or RGB PNG and baseline JPEG; anything with color is
reduced to gray through the integer luma transform so decoded pixels are
reproducible byte-for-byte. Output is always 8-bit grayscale PNG.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .preproc import rgb_to_gray

__all__ = ["IMAGE_EXTENSIONS", "read_gray", "write_png", "is_image_path"]

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def is_image_path(path: Path | str) -> bool:
    return Path(path).suffix.lower() in IMAGE_EXTENSIONS


def read_gray(path: Path | str) -> np.ndarray:
    """Decode an image file to a 2D uint8 array.

    Grayscale sources pass through untouched; color sources go through
    ``round(0.299 R + 0.587 G + 0.114 B)``. Raises on undecodable files.
    """
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        rgb = im.convert("RGB")
        return rgb_to_gray(np.asarray(rgb, dtype=np.uint8))


def write_png(path: Path | str, img: np.ndarray) -> None:
    """Write a 2D uint8 array as grayscale PNG, creating parent dirs."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError(f"expected 2D uint8 image, got {arr.shape} {arr.dtype}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
