"""Raster primitives: image I/O, mask binarization, padding, patch grids."""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np
from PIL import Image


class Label(enum.IntEnum):
    """Patch classes. Numeric order doubles as the vote tie-break order."""

    GLAND = 0
    MIX = 1
    NONGLAND = 2


class PatchRef(NamedTuple):
    """Square window located at column ``x0``, row ``y0`` in a padded raster."""

    x0: int
    y0: int
    w: int


def load_image_rgb(path) -> np.ndarray:
    """Load a color raster (BMP, PNG, ...) as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_annotation(path) -> np.ndarray:
    """Load an integer-labeled annotation as an (H, W) int array.

    Palette images yield their palette indices, which is where annotation
    files keep the per-object ids. Grayscale 8/16-bit rasters are read
    directly. An RGB file is accepted only if its channels are identical.
    """
    with Image.open(path) as im:
        if im.mode in ("P", "L", "I", "I;16"):
            arr = np.asarray(im)
        elif im.mode == "RGB":
            rgb = np.asarray(im)
            if (rgb[..., 0] != rgb[..., 1]).any() or (rgb[..., 0] != rgb[..., 2]).any():
                raise ValueError(f"annotation is not single-channel: {path}")
            arr = rgb[..., 0]
        else:
            arr = np.asarray(im.convert("I"))
    return arr.astype(np.int64)


def save_mask_png(mask: np.ndarray, path) -> None:
    """Write a {0,1} mask as a single-channel PNG holding 0 or 255."""
    data = (np.asarray(mask) != 0).astype(np.uint8) * 255
    Image.fromarray(data, mode="L").save(path, format="PNG")


def binarize_ground_truth(annotation: np.ndarray) -> np.ndarray:
    """Collapse an integer-labeled annotation to a {0,1} mask.

    Only exact zero stays background; every nonzero object id maps to 1.
    """
    ann = np.asarray(annotation)
    if ann.size == 0:
        raise ValueError("empty input")
    return (ann != 0).astype(np.uint8)


def pad_replicate(img: np.ndarray, w: int) -> np.ndarray:
    """Pad bottom/right with replicated edges to the next multiple of ``w``.

    The original content is unchanged at the top-left corner.
    """
    arr = np.asarray(img)
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    if arr.ndim < 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("empty input")
    h, wd = arr.shape[:2]
    pad_h = (-h) % w
    pad_w = (-wd) % w
    if pad_h == 0 and pad_w == 0:
        return arr
    widths = [(0, pad_h), (0, pad_w)] + [(0, 0)] * (arr.ndim - 2)
    return np.pad(arr, widths, mode="edge")


def patch_grid(height: int, width: int, w: int) -> list[PatchRef]:
    """Non-overlapping w-tiling of a padded raster, row-major order."""
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    if height % w != 0 or width % w != 0:
        raise ValueError(f"unpadded input: {height}x{width} is not a multiple of {w}")
    return [PatchRef(x, y, w) for y in range(0, height, w) for x in range(0, width, w)]


def sub_patch_offsets(parent_w: int, child_w: int) -> list[int]:
    """One-axis child offsets inside a parent window.

    Children start at multiples of ``child_w``; when those do not reach the
    parent's far edge, one extra overlapping child is anchored at the end so
    the union of children covers the parent exactly.
    """
    if child_w < 1 or child_w > parent_w:
        raise ValueError(f"child window {child_w} does not fit parent {parent_w}")
    offsets = list(range(0, parent_w - child_w + 1, child_w))
    if offsets[-1] + child_w < parent_w:
        offsets.append(parent_w - child_w)
    return offsets


def patch_label(mask_region: np.ndarray) -> Label:
    """All-ones -> GLAND, all-zeros -> NONGLAND, anything else -> MIX."""
    r = np.asarray(mask_region)
    if r.size == 0:
        raise ValueError("empty input")
    if r.min() == 1:
        return Label.GLAND
    if r.max() == 0:
        return Label.NONGLAND
    return Label.MIX


def majority_label(mask_region: np.ndarray) -> Label:
    """Binary majority vote over a mask region; ties go to NONGLAND."""
    r = np.asarray(mask_region)
    if r.size == 0:
        raise ValueError("empty input")
    ones = int(np.count_nonzero(r))
    return Label.GLAND if 2 * ones > r.size else Label.NONGLAND
