"""Tour of the preprocessing operators on a synthetic radiograph.

Builds a lung-field-like test image, runs every operator over it and
writes the results as PNGs next to this script (demos/output/preproc/).

Run:  python3 demos/01_preprocessing_tour.py
"""

from pathlib import Path

import numpy as np

from cxrnet.image_io import write_png
from cxrnet.preproc import (
    adjust_brightness_contrast,
    adaptive_threshold_gaussian,
    histogram_equalize,
    hybrid_preprocess,
    local_ternary_pattern,
)

OUT = Path(__file__).parent / "output" / "preproc"


def synthetic_radiograph(side=256, seed=0):
    """Two bright elliptical 'lung fields' on a dark thorax, plus noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    cy = side * 0.52
    img = np.full((side, side), 30.0)
    for cx in (side * 0.32, side * 0.68):
        d = ((yy - cy) / (side * 0.30)) ** 2 + ((xx - cx) / (side * 0.16)) ** 2
        img += np.where(d < 1.0, 120.0 * (1.0 - d), 0.0)
    img += 25.0 * np.sin(yy / 9.0)  # rib-like banding
    img += rng.normal(0, 6, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def stats(name, img):
    print(f"{name:12s} min={img.min():3d} max={img.max():3d} "
          f"mean={img.mean():6.1f} distinct={np.unique(img).size}")


def main():
    img = synthetic_radiograph()
    write_png(OUT / "original.png", img)
    stats("original", img)

    augmented = adjust_brightness_contrast(img, alpha=1.2, beta=10.0)
    write_png(OUT / "augment.png", augmented)
    stats("augment", augmented)

    equalized = histogram_equalize(img)
    write_png(OUT / "histeq.png", equalized)
    stats("histeq", equalized)

    maps = local_ternary_pattern(img, t=4)
    write_png(OUT / "ltp_upper.png", maps.upper)
    write_png(OUT / "ltp_lower.png", maps.lower)
    stats("ltp upper", maps.upper)
    stats("ltp lower", maps.lower)
    assert not (maps.upper & maps.lower).any(), "codes must be disjoint"

    binary = adaptive_threshold_gaussian(img, block=11, c=2.0)
    write_png(OUT / "threshold.png", binary)
    stats("threshold", binary)

    fused = hybrid_preprocess(img, block=11, c=2.0)
    write_png(OUT / "hybrid.png", fused)
    stats("hybrid", fused)

    print(f"\nwrote PNGs to {OUT}")


if __name__ == "__main__":
    main()
