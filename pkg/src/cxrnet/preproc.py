"""Image preprocessing operators for grayscale radiographs.

All operators take and return 2D ``uint8`` arrays (H x W, values 0..255),
are pure and deterministic, and preserve image dimensions. Rounding is
half-up everywhere (``floor(x + 0.5)``) so results are reproducible
bit-for-bit across platforms.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "LtpMaps",
    "adjust_brightness_contrast",
    "histogram_equalize",
    "local_ternary_pattern",
    "adaptive_threshold_gaussian",
    "hybrid_preprocess",
    "rgb_to_gray",
    "gaussian_kernel_1d",
    "OPERATORS",
    "apply_operator",
]

# 8-neighborhood in fixed clockwise order starting at the top-left corner.
# Neighbor k contributes bit 2**(7-k), so the first neighbor is the MSB.
NEIGHBOR_OFFSETS = (
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
)


class LtpMaps(NamedTuple):
    """Bit-packed local ternary pattern codes.

    ``upper`` packs the +1 labels (neighbor above the band), ``lower``
    the -1 labels (neighbor below the band). For every pixel
    ``upper & lower == 0``: a neighbor cannot be on both sides at once.
    """

    upper: np.ndarray
    lower: np.ndarray


def _check_image(img: np.ndarray, name: str = "img") -> np.ndarray:
    """Validate an 8-bit grayscale image and return it as int32 for math."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"{name} must have an integer dtype, got {arr.dtype}")
    work = arr.astype(np.int32)
    if work.min() < 0 or work.max() > 255:
        raise ValueError(f"{name} values must lie in [0, 255]")
    return work


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def adjust_brightness_contrast(
    img: np.ndarray, alpha: float = 1.2, beta: float = 10.0
) -> np.ndarray:
    """Linear brightness/contrast enhancement.

    Each pixel maps to ``clamp(round(alpha * p + beta), 0, 255)``. This is
    the augmentation operator applied ahead of training; the defaults give
    a mild enhancement.

    Args:
        img: 2D uint8 image.
        alpha: contrast factor, must be > 0.
        beta: additive brightness offset.

    Returns:
        Transformed image, same shape, dtype uint8.
    """
    work = _check_image(img)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    out = _round_half_up(float(alpha) * work.astype(np.float64) + float(beta))
    return np.clip(out, 0, 255).astype(np.uint8)


def histogram_equalize(img: np.ndarray) -> np.ndarray:
    """Global histogram equalization through the cumulative histogram.

    Intensity ``v`` maps to ``round((cdf(v) - cdf_min) / (N - cdf_min) * 255)``
    where ``cdf`` is the cumulative pixel count and ``cdf_min`` its smallest
    nonzero value. The mapping is monotone non-decreasing, and an image whose
    256 intensities are already uniformly populated is a fixed point.

    A single-intensity image is returned unchanged (the formula would
    otherwise divide by zero).
    """
    work = _check_image(img)
    hist = np.bincount(work.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    n = work.size
    cdf_min = int(cdf[np.nonzero(hist)[0][0]])
    if cdf_min == n:  # one intensity only
        return work.astype(np.uint8)
    lut = _round_half_up((cdf - cdf_min).astype(np.float64) * 255.0 / (n - cdf_min))
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[work]


def local_ternary_pattern(img: np.ndarray, t: int = 0) -> LtpMaps:
    """Local ternary pattern codes with comparison band half-width ``t``.

    Every pixel's 8 neighbors (clockwise from top-left) get label +1 when
    ``neighbor > center + t``, -1 when ``neighbor < center - t`` and 0
    inside the band. The +1 labels pack into ``upper`` and the -1 labels
    into ``lower``, neighbor k at bit ``2**(7-k)``. Border pixels see
    replicated edges.

    Args:
        img: 2D uint8 image, at least 3x3.
        t: non-negative band half-width (0 means strict comparison).

    Returns:
        :class:`LtpMaps` with two uint8 code images of the input's shape.
    """
    work = _check_image(img)
    h, w = work.shape
    if h < 3 or w < 3:
        raise ValueError(f"image must be at least 3x3, got {h}x{w}")
    t = int(t)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")

    padded = np.pad(work, 1, mode="edge")
    upper = np.zeros((h, w), dtype=np.uint8)
    lower = np.zeros((h, w), dtype=np.uint8)
    for k, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        bit = np.uint8(1 << (7 - k))
        neighbor = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        upper |= np.where(neighbor > work + t, bit, 0).astype(np.uint8)
        lower |= np.where(neighbor < work - t, bit, 0).astype(np.uint8)
    return LtpMaps(upper=upper, lower=lower)


def gaussian_kernel_1d(size: int) -> np.ndarray:
    """Normalized 1D Gaussian weights for a window of odd length ``size``.

    Sigma follows the window size: ``0.3 * ((size - 1) * 0.5 - 1) + 0.8``.
    """
    if size < 3 or size % 2 == 0:
        raise ValueError(f"window size must be odd and >= 3, got {size}")
    sigma = 0.3 * ((size - 1) * 0.5 - 1.0) + 0.8
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def adaptive_threshold_gaussian(
    img: np.ndarray, block: int = 11, c: float = 2.0
) -> np.ndarray:
    """Binarize against a Gaussian-weighted local mean.

    A pixel becomes 255 when ``p > G(p) - c`` and 0 otherwise, with ``G``
    the Gaussian-weighted mean over the ``block x block`` neighborhood
    (mirrored borders, edge row not duplicated). Output is strictly binary.

    Args:
        img: 2D uint8 image.
        block: odd window side >= 3; must also be small enough that the
            mirror padding fits (block <= 2 * min(H, W) - 1).
        c: offset subtracted from the local mean.
    """
    work = _check_image(img)
    kernel = gaussian_kernel_1d(int(block))
    pad = (int(block) - 1) // 2
    h, w = work.shape
    if pad >= h or pad >= w:
        raise ValueError(
            f"block {block} too large for {h}x{w} image with mirrored borders"
        )
    padded = np.pad(work.astype(np.float64), pad, mode="reflect")
    # Separable pass: rows then columns.
    rows = np.zeros((h, w + 2 * pad), dtype=np.float64)
    for i in range(int(block)):
        rows += kernel[i] * padded[i : i + h, :]
    local_mean = np.zeros((h, w), dtype=np.float64)
    for j in range(int(block)):
        local_mean += kernel[j] * rows[:, j : j + w]
    return np.where(work > local_mean - float(c), 255, 0).astype(np.uint8)


def hybrid_preprocess(img: np.ndarray, block: int = 11, c: float = 2.0) -> np.ndarray:
    """Histogram equalization followed by Gaussian adaptive thresholding."""
    return adaptive_threshold_gaussian(histogram_equalize(img), block=block, c=c)


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert an RGB raster to 8-bit gray with integer luma weights.

    ``gray = round(0.299 R + 0.587 G + 0.114 B)``, rounded half-up.
    """
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise ValueError(f"expected HxWx3 RGB array, got shape {arr.shape}")
    luma = (
        0.299 * arr[:, :, 0].astype(np.float64)
        + 0.587 * arr[:, :, 1].astype(np.float64)
        + 0.114 * arr[:, :, 2].astype(np.float64)
    )
    return np.clip(_round_half_up(luma), 0, 255).astype(np.uint8)


def _identity(img: np.ndarray) -> np.ndarray:
    return _check_image(img).astype(np.uint8)


def _ltp_upper(img: np.ndarray, t: int = 0) -> np.ndarray:
    return local_ternary_pattern(img, t=t).upper


def _ltp_lower(img: np.ndarray, t: int = 0) -> np.ndarray:
    return local_ternary_pattern(img, t=t).lower


# Named single-image operators usable from batch pipelines and the CLI.
# "ltp" itself yields two maps and is therefore only exposed by the CLI
# preprocess command, which writes *_upper / *_lower files.
OPERATORS = {
    "identity": _identity,
    "augment": adjust_brightness_contrast,
    "histeq": histogram_equalize,
    "threshold": adaptive_threshold_gaussian,
    "hybrid": hybrid_preprocess,
    "ltp_upper": _ltp_upper,
    "ltp_lower": _ltp_lower,
}


def apply_operator(name: str, img: np.ndarray, params: dict | None = None) -> np.ndarray:
    """Apply a named single-output operator, e.g. from a batch plan."""
    if name not in OPERATORS:
        valid = ", ".join(sorted(OPERATORS))
        raise ValueError(f"unknown preprocessing operator {name!r}; valid: {valid}")
    return OPERATORS[name](img, **(params or {}))
