"""Stain appearance normalization by statistics transfer in lalphabeta space.

Implements the color transfer of Reinhard et al. (IEEE CG&A 2001) in
Ruderman's decorrelated log opponent space: RGB is mapped to LMS cone
responses, log10-compressed, and rotated into (l, alpha, beta); each channel
is then shifted/scaled so its mean and standard deviation match a target
image's. The RGB->LMS rows are scaled to unit sum so the achromatic axis
(R = G = B) maps to alpha = beta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Ruderman cone-response matrix, rows normalized to unit sum (see module doc).
_RGB2LMS = np.array(
    [
        [0.3811, 0.5783, 0.0402],
        [0.1967, 0.7244, 0.0782],
        [0.0241, 0.1288, 0.8444],
    ]
)
_RGB2LMS = _RGB2LMS / _RGB2LMS.sum(axis=1, keepdims=True)
_LMS2RGB = np.linalg.inv(_RGB2LMS)

_LMS2LAB = np.diag([1.0 / np.sqrt(3.0), 1.0 / np.sqrt(6.0), 1.0 / np.sqrt(2.0)]) @ np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -2.0],
        [1.0, -1.0, 0.0],
    ]
)
_LAB2LMS = np.linalg.inv(_LMS2LAB)

#: Floor for per-channel standard deviations; keeps the scale ratio finite
#: for constant images.
STD_EPS = 1e-6

_MIN_INTENSITY = 1.0 / 255.0


@dataclass
class ChannelStats:
    """Per-channel mean and population standard deviation in lalphabeta."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(3)
        self.stds = np.maximum(np.asarray(self.stds, dtype=np.float64).reshape(3), STD_EPS)

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelStats":
        return cls(np.array(d["means"]), np.array(d["stds"]))


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Map an (H, W, 3) uint8 image to float lalphabeta coordinates.

    Channels are scaled to [0, 1] and clamped below at 1/255 so the log
    is finite for pure black.
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    rgb = np.maximum(arr.astype(np.float64) / 255.0, _MIN_INTENSITY)
    lms = rgb @ _RGB2LMS.T
    return np.log10(lms) @ _LMS2LAB.T


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Invert :func:`rgb_to_lab`, clamping to [0, 255] and rounding to uint8."""
    lab = np.asarray(lab, dtype=np.float64)
    # Clamp the log-LMS exponents so far-out-of-gamut inputs stay finite
    # instead of overflowing to inf/NaN in the matrix products.
    loglms = np.clip(lab @ _LAB2LMS.T, -300.0, 300.0)
    rgb = (10.0 ** loglms) @ _LMS2RGB.T
    return np.clip(np.rint(rgb * 255.0), 0.0, 255.0).astype(np.uint8)


def channel_stats(lab: np.ndarray) -> ChannelStats:
    """Mean and population std per channel of an (..., 3) lab array."""
    arr = np.asarray(lab, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty input")
    flat = arr.reshape(-1, 3)
    return ChannelStats(flat.mean(axis=0), flat.std(axis=0))


def match_channel_stats(
    lab: np.ndarray, target: ChannelStats, source: ChannelStats | None = None
) -> np.ndarray:
    """Shift/scale each lab channel so source stats land on the target's.

    Every value maps to ``(v - mean_src) * (std_tgt / std_src) + mean_tgt``.
    """
    src = channel_stats(lab) if source is None else source
    return (lab - src.means) * (target.stds / src.stds) + target.means


def reinhard_normalize(img: np.ndarray, target: ChannelStats) -> np.ndarray:
    """Return ``img`` re-colored so its lab statistics match ``target``."""
    return lab_to_rgb(match_channel_stats(rgb_to_lab(img), target))


def stats_from_image(img: np.ndarray) -> ChannelStats:
    """Convenience: lab statistics of an RGB image (reference fitting)."""
    return channel_stats(rgb_to_lab(img))
