"""Dataset ingestion for the Warwick gland-segmentation layout.

Images are named ``<split>_<n>.bmp`` (or ``.png``) with annotations at
``<split>_<n>_anno.<ext>``; histologic grades come from a ``Grade.csv``
in the dataset root when present. Entries are returned in lexicographic
name order, which also fixes the default normalization reference.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import load_annotation, load_image_rgb

logger = logging.getLogger(__name__)

_EXTENSIONS = (".bmp", ".png")

GRADE_UNKNOWN = "unknown"


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    image_path: Path
    annotation_path: Path | None
    grade: str = GRADE_UNKNOWN


def _load_grades(root: Path) -> dict[str, str]:
    for candidate in ("Grade.csv", "grade.csv", "Grade.CSV"):
        path = root / candidate
        if path.exists():
            break
    else:
        return {}
    grades: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}
        cols = [h.strip().lower() for h in header]
        try:
            name_col = next(i for i, h in enumerate(cols) if "name" in h)
            grade_col = next(i for i, h in enumerate(cols) if "grade" in h)
        except StopIteration:
            logger.warning("grade file %s has no name/grade columns; grades unknown", path)
            return {}
        for row in reader:
            if len(row) <= max(name_col, grade_col):
                continue
            value = row[grade_col].strip().lower()
            if "benign" in value:
                grade = "benign"
            elif "malig" in value:
                grade = "malignant"
            else:
                grade = GRADE_UNKNOWN
            grades[row[name_col].strip()] = grade
    return grades


def load_dataset(root, split: str) -> list[DatasetEntry]:
    """Scan ``root`` for the ``split`` images and their annotations."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset directory not found: {root}")
    grades = _load_grades(root)
    pattern = re.compile(rf"^{re.escape(split)}_(\d+)$")
    entries = []
    for path in root.iterdir():
        if path.suffix.lower() not in _EXTENSIONS:
            continue
        if not pattern.match(path.stem):
            continue
        anno = None
        for ext in _EXTENSIONS:
            cand = path.with_name(path.stem + "_anno" + ext)
            if cand.exists():
                anno = cand
                break
        if anno is None:
            logger.warning("no annotation found for %s", path.name)
        entries.append(
            DatasetEntry(path.stem, path, anno, grades.get(path.stem, GRADE_UNKNOWN))
        )
    entries.sort(key=lambda e: e.name)
    return entries


def load_entry(entry: DatasetEntry) -> tuple[str, np.ndarray, np.ndarray | None]:
    """Load an entry's pixels; raises naming the unreadable file."""
    try:
        img = load_image_rgb(entry.image_path)
    except Exception as exc:
        raise ValueError(f"cannot read image file: {entry.image_path}") from exc
    anno = None
    if entry.annotation_path is not None:
        try:
            anno = load_annotation(entry.annotation_path)
        except Exception as exc:
            raise ValueError(f"cannot read annotation file: {entry.annotation_path}") from exc
    return entry.name, img, anno


def load_training_samples(entries) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Load the annotated entries; unannotated ones are skipped with a warning."""
    samples = []
    for entry in entries:
        name, img, anno = load_entry(entry)
        if anno is None:
            logger.warning("skipping %s: no annotation", name)
            continue
        samples.append((name, img, anno))
    return samples
