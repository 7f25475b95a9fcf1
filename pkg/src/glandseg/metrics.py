"""Segmentation accuracy metrics and evaluation reports."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .imaging import pad_replicate

CSV_HEADER = ("image", "grade", "pixel_accuracy", "patch_accuracy", "postprocessed")


def pixel_accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of pixels on which the two masks agree."""
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    return float(((p != 0) == (t != 0)).mean())


def _majority_tiles(mask: np.ndarray, w: int) -> np.ndarray:
    padded = pad_replicate((np.asarray(mask) != 0).astype(np.uint8), w)
    h, wd = padded.shape
    sums = padded.reshape(h // w, w, wd // w, w).sum(axis=(1, 3), dtype=np.int64)
    return (2 * sums > w * w)


def patch_accuracy(predicted: np.ndarray, truth: np.ndarray, w: int) -> float:
    """Fraction of w-tiles whose majority labels agree (ties -> NonGland)."""
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {t.shape}")
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    return float((_majority_tiles(p, w) == _majority_tiles(t, w)).mean())


@dataclass(frozen=True)
class EvalRow:
    image: str
    grade: str
    pixel_accuracy: float
    patch_accuracy: float
    postprocessed: bool


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    average_pixel_accuracy: float
    average_patch_accuracy: float
    postprocessed: bool

    @classmethod
    def from_rows(cls, rows, postprocessed: bool) -> "EvalReport":
        rows = tuple(rows)
        if not rows:
            raise ValueError("empty report")
        return cls(
            rows,
            float(np.mean([r.pixel_accuracy for r in rows])),
            float(np.mean([r.patch_accuracy for r in rows])),
            postprocessed,
        )


def write_reports_csv(reports, path) -> None:
    """Write one or more reports; each block ends with its Average row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for report in reports:
            flag = str(report.postprocessed).lower()
            for row in report.rows:
                writer.writerow(
                    [row.image, row.grade, repr(row.pixel_accuracy), repr(row.patch_accuracy), flag]
                )
            writer.writerow(
                [
                    "Average",
                    "",
                    repr(report.average_pixel_accuracy),
                    repr(report.average_patch_accuracy),
                    flag,
                ]
            )
