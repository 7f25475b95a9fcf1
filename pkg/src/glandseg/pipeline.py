"""Hierarchical patch cascade: training and whole-image prediction.

Training tiles each image at the coarsest window and labels tiles
Gland/NonGland/Mix from the binarized annotation. Every deeper level
re-patches only the Mix tiles of the level above with a smaller window;
the final level is trained binary, with Mix sub-patches collapsed by
majority. Prediction walks the same cascade: Gland paints white, NonGland
stays black, Mix descends. Two descent modes exist:

- ``fine`` (default): each sub-patch paints at its own window size and
  only Mix sub-patches recurse;
- ``coarse-majority``: the modal sub-patch label is assigned to the whole
  top-level patch, recursing on Mix sub-patches only while the mode
  itself is Mix.

Overlapping sub-patch paints resolve white-wins (a pixel is white iff any
region covering it was called Gland). A Mix call at a level with no
deeper classifier falls back to the classifier's binary resolution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .colornorm import ChannelStats, reinhard_normalize, stats_from_image
from .features import LevelConfig, assemble_features
from .forest import KnnClassifier, RandomForest, TrainParams, mix_seed, train_forest
from .imaging import (
    Label,
    PatchRef,
    binarize_ground_truth,
    majority_label,
    pad_replicate,
    patch_grid,
    patch_label,
    sub_patch_offsets,
)

logger = logging.getLogger(__name__)

PREDICTION_MODES = ("fine", "coarse-majority")
CLASSIFIERS = ("rf", "knn")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    levels: tuple[LevelConfig, ...] = (
        LevelConfig(w=21, m=7),
        LevelConfig(w=11, m=5),
        LevelConfig(w=5, m=3),
    )
    train_params: TrainParams = TrainParams()
    normalization_enabled: bool = True
    prediction_mode: str = "fine"
    classifier: str = "rf"
    knn_k: int = 5
    reference_image: str | None = None

    def __post_init__(self):
        if not self.levels:
            raise ValueError("at least one level is required")
        windows = [lvl.w for lvl in self.levels]
        if any(b >= a for a, b in zip(windows, windows[1:])):
            raise ValueError(f"windows must be strictly decreasing, got {windows}")
        if self.prediction_mode not in PREDICTION_MODES:
            raise ValueError(f"unknown prediction mode: {self.prediction_mode!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier: {self.classifier!r}")
        if self.knn_k < 1:
            raise ValueError(f"knn_k must be >= 1, got {self.knn_k}")


@dataclass
class HierarchicalModel:
    config: PipelineConfig
    target_stats: ChannelStats | None
    forests: list[RandomForest | KnnClassifier | None]
    format_version: int = FORMAT_VERSION


def _extract(img: np.ndarray, regions, lvl: LevelConfig) -> np.ndarray:
    x = np.empty((len(regions), lvl.feature_dim), dtype=np.float64)
    for r, (x0, y0) in enumerate(regions):
        x[r] = assemble_features(img[y0 : y0 + lvl.w, x0 : x0 + lvl.w], lvl)
    return x


def _extract_training(imgs, regions, lvl: LevelConfig) -> np.ndarray:
    x = np.empty((len(regions), lvl.feature_dim), dtype=np.float64)
    for r, (i, x0, y0) in enumerate(regions):
        x[r] = assemble_features(imgs[i][y0 : y0 + lvl.w, x0 : x0 + lvl.w], lvl)
    return x


def _fit_level(x: np.ndarray, y: np.ndarray, cfg: PipelineConfig, level: int):
    if cfg.classifier == "knn":
        return KnnClassifier(x, y, cfg.knn_k)
    params = replace(cfg.train_params, seed=mix_seed(cfg.train_params.seed, level))
    return train_forest(x, y, params)


def train_hierarchical(samples, cfg: PipelineConfig) -> HierarchicalModel:
    """Train the cascade on ``samples`` = [(name, rgb image, annotation)].

    The annotation is an integer-labeled array; it is binarized here. When
    normalization is enabled the target statistics come from
    ``cfg.reference_image`` or, by default, the first sample, and are
    stored in the model.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no training data")
    target_stats = None
    if cfg.normalization_enabled:
        if cfg.reference_image is not None:
            matches = [s for s in samples if s[0] == cfg.reference_image]
            if not matches:
                raise ValueError(f"reference image not found: {cfg.reference_image!r}")
            ref = matches[0]
        else:
            ref = samples[0]
        target_stats = stats_from_image(ref[1])
        logger.info("normalization target: %s", ref[0])

    w0 = cfg.levels[0].w
    imgs, masks = [], []
    for name, img, anno in samples:
        img = np.asarray(img)
        anno = np.asarray(anno)
        if img.shape[:2] != anno.shape[:2]:
            raise ValueError(f"image/annotation dimensions differ for {name!r}")
        if target_stats is not None:
            img = reinhard_normalize(img, target_stats)
        imgs.append(pad_replicate(img, w0))
        masks.append(pad_replicate(binarize_ground_truth(anno), w0))

    n_levels = len(cfg.levels)
    regions = [
        (i, p.x0, p.y0)
        for i, im in enumerate(imgs)
        for p in patch_grid(im.shape[0], im.shape[1], w0)
    ]
    forests: list[RandomForest | KnnClassifier | None] = []
    for level, lvl in enumerate(cfg.levels):
        final = level == n_levels - 1
        if not regions:
            logger.warning("no training patches reached level %d; classifier absent", level)
            forests.append(None)
            continue
        label_of = majority_label if final else patch_label
        y = np.array(
            [int(label_of(masks[i][y0 : y0 + lvl.w, x0 : x0 + lvl.w])) for i, x0, y0 in regions],
            dtype=np.int64,
        )
        x = _extract_training(imgs, regions, lvl)
        forests.append(_fit_level(x, y, cfg, level))
        logger.info("level %d: trained on %d patches (w=%d)", level, len(regions), lvl.w)
        if final:
            regions = []
        else:
            child_w = cfg.levels[level + 1].w
            next_regions = []
            for (i, x0, y0), lab in zip(regions, y):
                if lab != Label.MIX:
                    continue
                offsets = sub_patch_offsets(lvl.w, child_w)
                next_regions.extend(
                    (i, x0 + ox, y0 + oy) for oy in offsets for ox in offsets
                )
            regions = next_regions
    return HierarchicalModel(cfg, target_stats, forests)


def _predict_level(model: HierarchicalModel, level: int, x: np.ndarray) -> np.ndarray:
    """Level prediction with the absent-deeper-level MIX fallback applied."""
    clf = model.forests[level]
    if clf is None:
        raise ValueError(f"no classifier at level {level}")
    if clf.feature_dim != model.config.levels[level].feature_dim:
        raise ValueError(
            f"feature dimension mismatch at level {level}: model has {clf.feature_dim}, "
            f"config yields {model.config.levels[level].feature_dim}"
        )
    labels = clf.predict(x)
    deeper = level + 1 < len(model.forests) and model.forests[level + 1] is not None
    if not deeper:
        mix = labels == Label.MIX
        if mix.any():
            labels = labels.copy()
            labels[mix] = clf.resolve_binary(x[mix])
    return labels


def _children(parents, parent_w: int, child_w: int):
    offsets = sub_patch_offsets(parent_w, child_w)
    kids = []
    owner = []
    for pi, (x0, y0) in enumerate(parents):
        for oy in offsets:
            for ox in offsets:
                kids.append((x0 + ox, y0 + oy))
                owner.append(pi)
    return kids, np.array(owner, dtype=np.int64)


def _modal(labels: np.ndarray) -> int:
    tallies = np.bincount(labels, minlength=3)
    return int(np.argmax(tallies))


def predict_image(model: HierarchicalModel, img: np.ndarray, mode: str | None = None) -> np.ndarray:
    """Segment ``img`` into a {0,1} mask of the image's original size."""
    return predict_image_with_labels(model, img, mode)[0]


def predict_image_with_labels(
    model: HierarchicalModel, img: np.ndarray, mode: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`predict_image`, also returning the level-0 label grid."""
    cfg = model.config
    mode = cfg.prediction_mode if mode is None else mode
    if mode not in PREDICTION_MODES:
        raise ValueError(f"unknown prediction mode: {mode!r}")
    img = np.asarray(img)
    h, w = img.shape[:2]
    if model.target_stats is not None:
        img = reinhard_normalize(img, model.target_stats)
    w0 = cfg.levels[0].w
    padded = pad_replicate(img, w0)
    out = np.zeros(padded.shape[:2], dtype=np.uint8)

    refs = patch_grid(padded.shape[0], padded.shape[1], w0)
    x0s = _extract(padded, [(p.x0, p.y0) for p in refs], cfg.levels[0])
    labels0 = _predict_level(model, 0, x0s)
    grid = labels0.reshape(padded.shape[0] // w0, padded.shape[1] // w0)
    for ref, lab in zip(refs, labels0):
        if lab == Label.GLAND:
            out[ref.y0 : ref.y0 + w0, ref.x0 : ref.x0 + w0] = 1
    mix_refs = [(p.x0, p.y0) for p, lab in zip(refs, labels0) if lab == Label.MIX]

    if mode == "fine":
        parents = mix_refs
        level = 1
        while parents:
            lvl = cfg.levels[level]
            kids, _ = _children(parents, cfg.levels[level - 1].w, lvl.w)
            xk = _extract(padded, kids, lvl)
            labs = _predict_level(model, level, xk)
            for (kx, ky), lab in zip(kids, labs):
                if lab == Label.GLAND:
                    out[ky : ky + lvl.w, kx : kx + lvl.w] = 1
            parents = [kid for kid, lab in zip(kids, labs) if lab == Label.MIX]
            level += 1
    else:
        # coarse-majority: each Mix top-level patch takes the modal label of
        # its current sub-patches; only the Mix sub-patches of a Mix mode
        # descend further.
        active = {pi: [ref] for pi, ref in enumerate(mix_refs)}
        level = 1
        while active:
            if level >= len(cfg.levels):
                raise ValueError("Mix labels survived the final level")
            lvl = cfg.levels[level]
            flat_parents, groups = [], []
            for pi, regs in active.items():
                for reg in regs:
                    flat_parents.append(reg)
                    groups.append(pi)
            kids, owner = _children(flat_parents, cfg.levels[level - 1].w, lvl.w)
            group_of_kid = np.array([groups[o] for o in owner], dtype=np.int64)
            xk = _extract(padded, kids, lvl)
            labs = _predict_level(model, level, xk)
            next_active = {}
            for pi in active:
                sel = group_of_kid == pi
                modal = _modal(labs[sel])
                if modal == Label.MIX:
                    next_active[pi] = [kid for kid, lab, g in zip(kids, labs, group_of_kid) if g == pi and lab == Label.MIX]
                else:
                    px, py = mix_refs[pi]
                    if modal == Label.GLAND:
                        out[py : py + w0, px : px + w0] = 1
            active = next_active
            level += 1

    return out[:h, :w], grid


def label_grid(mask: np.ndarray, w: int) -> np.ndarray:
    """Per-tile Gland/NonGland/Mix labels of a padded {0,1} mask."""
    m = np.asarray(mask)
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    if m.ndim != 2 or m.size == 0:
        raise ValueError("empty input")
    h, wd = m.shape
    if h % w != 0 or wd % w != 0:
        raise ValueError(f"unpadded input: {h}x{wd} is not a multiple of {w}")
    tiles = m.reshape(h // w, w, wd // w, w)
    mn = tiles.min(axis=(1, 3))
    mx = tiles.max(axis=(1, 3))
    return np.where(mn == 1, int(Label.GLAND), np.where(mx == 0, int(Label.NONGLAND), int(Label.MIX)))
