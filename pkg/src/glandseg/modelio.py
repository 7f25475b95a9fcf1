"""Versioned model persistence.

Models are stored as a single JSON document: format version, pipeline
configuration, normalization target statistics, and one classifier per
level (a forest as flat node arrays, or a KNN training set). JSON floats
round-trip exactly, so a saved model predicts bit-identically to the
in-memory one. Loading validates the structural invariants and names the
offending field on failure.
"""

from __future__ import annotations

import json

import numpy as np

from .colornorm import ChannelStats
from .features import LevelConfig
from .forest import KnnClassifier, RandomForest, TrainParams
from .imaging import Label
from .pipeline import FORMAT_VERSION, HierarchicalModel, PipelineConfig


class ModelFormatError(ValueError):
    """Raised for unreadable, truncated, or invalid model files."""


def _config_to_dict(cfg: PipelineConfig) -> dict:
    return {
        "levels": [
            {
                "w": lvl.w,
                "m": lvl.m,
                "bins1d": lvl.bins1d,
                "bins2d": lvl.bins2d,
                "glcm_levels": lvl.glcm_levels,
            }
            for lvl in cfg.levels
        ],
        "train_params": {
            "trees": cfg.train_params.trees,
            "features_per_split": cfg.train_params.features_per_split,
            "min_samples_split": cfg.train_params.min_samples_split,
            "max_depth": cfg.train_params.max_depth,
            "seed": cfg.train_params.seed,
        },
        "normalization_enabled": cfg.normalization_enabled,
        "prediction_mode": cfg.prediction_mode,
        "classifier": cfg.classifier,
        "knn_k": cfg.knn_k,
        "reference_image": cfg.reference_image,
    }


def _config_from_dict(d: dict) -> PipelineConfig:
    return PipelineConfig(
        levels=tuple(LevelConfig(**lvl) for lvl in d["levels"]),
        train_params=TrainParams(**d["train_params"]),
        normalization_enabled=d["normalization_enabled"],
        prediction_mode=d["prediction_mode"],
        classifier=d["classifier"],
        knn_k=d["knn_k"],
        reference_image=d.get("reference_image"),
    )


def save_model(model: HierarchicalModel, path) -> None:
    doc = {
        "format_version": model.format_version,
        "config": _config_to_dict(model.config),
        "target_stats": None if model.target_stats is None else model.target_stats.to_dict(),
        "forests": [None if f is None else f.to_dict() for f in model.forests],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _validate_forest(d: dict, level: int, expected_dim: int, final: bool) -> None:
    where = f"forests[{level}]"
    dim = d.get("feature_dim")
    if dim != expected_dim:
        raise ModelFormatError(
            f"{where}.feature_dim: expected {expected_dim} from config, found {dim}"
        )
    allowed = {int(Label.GLAND), int(Label.NONGLAND)} if final else {int(l) for l in Label}
    classes = d.get("classes", [])
    if not set(classes) <= allowed:
        raise ModelFormatError(f"{where}.classes: {classes} not within {sorted(allowed)}")
    if d.get("kind") == "knn":
        rows = d.get("train_x", [])
        if not rows:
            raise ModelFormatError(f"{where}.train_x: empty training set")
        if any(len(r) != expected_dim for r in rows):
            raise ModelFormatError(f"{where}.train_x: row width differs from feature_dim")
        if len(d.get("train_y", [])) != len(rows):
            raise ModelFormatError(f"{where}.train_y: length differs from train_x")
        if int(d.get("k", 0)) < 1:
            raise ModelFormatError(f"{where}.k: must be >= 1")
        return
    if d.get("kind") != "forest":
        raise ModelFormatError(f"{where}.kind: unknown classifier kind {d.get('kind')!r}")
    trees = d.get("trees")
    if not trees:
        raise ModelFormatError(f"{where}.trees: empty forest")
    for t, tree in enumerate(trees):
        nodes = tree.get("nodes", [])
        if not nodes:
            raise ModelFormatError(f"{where}.trees[{t}].nodes: empty tree")
        for i, node in enumerate(nodes):
            field = f"{where}.trees[{t}].nodes[{i}]"
            if "counts" in node:
                counts = node["counts"]
                if len(counts) != len(Label) or sum(counts) < 1 or min(counts) < 0:
                    raise ModelFormatError(f"{field}.counts: invalid leaf counts {counts}")
                continue
            for key in ("feature", "threshold", "left", "right"):
                if key not in node:
                    raise ModelFormatError(f"{field}.{key}: missing")
            if not 0 <= node["feature"] < expected_dim:
                raise ModelFormatError(
                    f"{field}.feature: {node['feature']} out of range for {expected_dim} features"
                )
            for side in ("left", "right"):
                child = node[side]
                # Children strictly after parents makes the node graph
                # acyclic and rooted at 0 by construction.
                if not i < child < len(nodes):
                    raise ModelFormatError(f"{field}.{side}: child index {child} invalid")


def load_model(path) -> HierarchicalModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt or truncated model file: {path} ({exc})") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"not a model file: {path}")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"format_version: unsupported value {version!r} (this build reads {FORMAT_VERSION})"
        )
    try:
        cfg = _config_from_dict(doc["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"config: {exc}") from exc
    stats = doc.get("target_stats")
    target = None if stats is None else ChannelStats.from_dict(stats)
    raw_forests = doc.get("forests")
    if not isinstance(raw_forests, list) or len(raw_forests) != len(cfg.levels):
        raise ModelFormatError(
            f"forests: expected one classifier slot per level ({len(cfg.levels)})"
        )
    forests = []
    for level, raw in enumerate(raw_forests):
        if raw is None:
            forests.append(None)
            continue
        final = level == len(cfg.levels) - 1
        _validate_forest(raw, level, cfg.levels[level].feature_dim, final)
        if raw["kind"] == "knn":
            forests.append(KnnClassifier.from_dict(raw))
        else:
            forests.append(RandomForest.from_dict(raw, cfg.train_params))
    if forests[0] is None:
        raise ModelFormatError("forests[0]: the top level classifier must be present")
    return HierarchicalModel(cfg, target, forests, format_version=version)
