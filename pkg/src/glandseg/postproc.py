"""Mask post-processing: edge-band closing of segmentation output.

The predicted mask is treated as a 0/255 8-bit image, its Canny edges are
dilated with an octagonal structuring element, and the band is OR-ed back
into the mask. The operation is extensive (never removes white) and
monotone in pixel count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

ELEMENTS = ("octagon", "disk", "diamond", "sphere-projection")

#: NMS plateau tolerance, relative to the max gradient magnitude. Exact
#: symmetry ties keep both pixels regardless of convolution rounding.
_NMS_EPS = 1e-9


@dataclass(frozen=True)
class PostprocParams:
    gaussian_sigma: float = 1.4
    low_fraction: float = 0.1
    high_fraction: float = 0.3
    element: str = "octagon"
    radius: int = 3

    def __post_init__(self):
        if self.gaussian_sigma <= 0:
            raise ValueError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if not (0.0 < self.low_fraction < self.high_fraction <= 1.0):
            raise ValueError(
                f"need 0 < low < high <= 1, got low={self.low_fraction} high={self.high_fraction}"
            )
        if self.element not in ELEMENTS:
            raise ValueError(f"unknown structuring element: {self.element!r}")
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.element == "octagon" and self.radius % 3 != 0:
            raise ValueError(f"octagon radius must be a multiple of 3, got {self.radius}")


def structuring_element(kind: str, radius: int) -> np.ndarray:
    """Boolean (2r+1, 2r+1) footprint for the supported element shapes.

    The octagon (radius a multiple of 3) is the set of offsets with
    ``max(|x|, |y|) <= r`` and ``|x| + |y| <= 4r/3``; sphere-projection is
    the flat shadow of a ball, i.e. the same footprint as the disk.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    if kind == "octagon":
        if radius % 3 != 0:
            raise ValueError(f"octagon radius must be a multiple of 3, got {radius}")
        return (np.maximum(np.abs(x), np.abs(y)) <= radius) & (
            np.abs(x) + np.abs(y) <= (4 * radius) // 3
        )
    if kind in ("disk", "sphere-projection"):
        return x * x + y * y <= radius * radius
    if kind == "diamond":
        return np.abs(x) + np.abs(y) <= radius
    raise ValueError(f"unknown structuring element: {kind!r}")


def canny_edges(mask: np.ndarray, params: PostprocParams = PostprocParams()) -> np.ndarray:
    """Canny edge map of a {0,1} mask.

    Gaussian smoothing and Sobel gradients use replicate borders; NMS
    compares against the two neighbors along the quantized gradient
    direction (outside pixels count as 0) and keeps plateau ties on both
    sides; the double threshold takes low/high as fractions of the max
    gradient magnitude, and weak edges survive only when 8-connected to a
    strong one.
    """
    m = np.asarray(mask)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("empty input")
    img = (m != 0).astype(np.float64) * 255.0
    smooth = ndimage.gaussian_filter(img, params.gaussian_sigma, mode="nearest")
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return np.zeros(m.shape, dtype=np.uint8)

    # Quantize gradient angle into 4 sectors and pick the two neighbors.
    angle = np.mod(np.rad2deg(np.arctan2(gy, gx)), 180.0)
    padded = np.pad(mag, 1, mode="constant")
    c = padded[1:-1, 1:-1]
    east, west = padded[1:-1, 2:], padded[1:-1, :-2]
    south, north = padded[2:, 1:-1], padded[:-2, 1:-1]
    ne, sw = padded[:-2, 2:], padded[2:, :-2]
    nw, se = padded[:-2, :-2], padded[2:, 2:]
    # Row indices grow downward, so a gradient in [22.5, 67.5) points
    # down-right and its along-gradient neighbors are SE/NW.
    horizontal = (angle < 22.5) | (angle >= 157.5)
    diag_down_right = (angle >= 22.5) & (angle < 67.5)
    vertical = (angle >= 67.5) & (angle < 112.5)
    n1 = np.select([horizontal, diag_down_right, vertical], [east, se, south], sw)
    n2 = np.select([horizontal, diag_down_right, vertical], [west, nw, north], ne)
    eps = _NMS_EPS * peak
    keep = (c >= n1 - eps) & (c >= n2 - eps) & (c > eps)
    nms = np.where(keep, mag, 0.0)

    high = params.high_fraction * peak
    low = params.low_fraction * peak
    strong = nms >= high
    candidates = nms >= low
    labels, _ = ndimage.label(candidates, structure=np.ones((3, 3), dtype=bool))
    keep_labels = np.unique(labels[strong])
    edges = candidates & np.isin(labels, keep_labels[keep_labels > 0])
    return edges.astype(np.uint8)


def dilate(mask: np.ndarray, element: str = "octagon", radius: int = 3) -> np.ndarray:
    """Binary dilation with the named structuring element."""
    m = np.asarray(mask)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("empty input")
    se = structuring_element(element, radius)
    return ndimage.binary_dilation(m != 0, structure=se).astype(np.uint8)


def postprocess(mask: np.ndarray, params: PostprocParams = PostprocParams()) -> np.ndarray:
    """OR the dilated Canny edge band back into the mask."""
    m = (np.asarray(mask) != 0).astype(np.uint8)
    band = dilate(canny_edges(m, params), params.element, params.radius)
    return (m | band).astype(np.uint8)
