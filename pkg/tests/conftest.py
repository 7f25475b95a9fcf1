"""Shared fixtures: synthetic gland-like images for end-to-end tests."""

import numpy as np
import pytest
from scipy import ndimage


def synthetic_gland_image(rng, size=256):
    """Bright smooth elliptical glands on a darker textured background.

    Glands sit near intensity 200 with sigma~10 smooth variation; the
    background sits near 90 with sigma~30 noise modulated by an 8-pixel
    checkerboard. Returns (rgb image, integer-labeled annotation).
    """
    yy, xx = np.mgrid[0:size, 0:size]
    checker = ((xx // 8 + yy // 8) % 2) * 2 - 1
    background = 90 + 10 * checker + rng.normal(0, 28, (size, size))
    annotation = np.zeros((size, size), dtype=np.int64)
    n_glands = int(rng.integers(3, 7))
    for gid in range(1, n_glands + 1):
        cx, cy = rng.uniform(0.15 * size, 0.85 * size, 2)
        a, b = rng.uniform(0.05 * size, 0.17 * size, 2)
        theta = rng.uniform(0, np.pi)
        u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
        v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
        inside = (u / a) ** 2 + (v / b) ** 2 <= 1.0
        annotation[inside] = gid
    gland = 200 + ndimage.gaussian_filter(rng.normal(0, 1, (size, size)), 3.0) * 25.0
    gray = np.where(annotation > 0, gland, background)
    img = np.stack(
        [np.clip(gray + off, 0, 255) for off in (8.0, -6.0, 2.0)], axis=-1
    ).astype(np.uint8)
    return img, annotation


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
