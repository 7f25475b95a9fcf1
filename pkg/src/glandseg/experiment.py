"""Model evaluation and multi-round experiment orchestration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .config import AppConfig
from .dataset import DatasetEntry, load_entry
from .forest import mix_seed
from .imaging import binarize_ground_truth
from .metrics import EvalReport, EvalRow, patch_accuracy, pixel_accuracy
from .pipeline import HierarchicalModel, PipelineConfig, predict_image, train_hierarchical
from .postproc import PostprocParams, postprocess

logger = logging.getLogger(__name__)


def evaluate_model(
    model: HierarchicalModel,
    test_samples,
    postproc_params: PostprocParams = PostprocParams(),
    mode: str | None = None,
) -> tuple[EvalReport, EvalReport]:
    """Per-image accuracy of raw and postprocessed predictions.

    ``test_samples`` rows are (name, grade, image, annotation). Returns the
    (raw, postprocessed) report pair.
    """
    w0 = model.config.levels[0].w
    raw_rows, post_rows = [], []
    for name, grade, img, anno in test_samples:
        truth = binarize_ground_truth(anno)
        pred = predict_image(model, img, mode=mode)
        raw_rows.append(
            EvalRow(name, grade, pixel_accuracy(pred, truth), patch_accuracy(pred, truth, w0), False)
        )
        post = postprocess(pred, postproc_params)
        post_rows.append(
            EvalRow(name, grade, pixel_accuracy(post, truth), patch_accuracy(post, truth, w0), True)
        )
        logger.info(
            "evaluated %s: pixel=%.4f patch=%.4f (post: %.4f/%.4f)",
            name,
            raw_rows[-1].pixel_accuracy,
            raw_rows[-1].patch_accuracy,
            post_rows[-1].pixel_accuracy,
            post_rows[-1].patch_accuracy,
        )
    return EvalReport.from_rows(raw_rows, False), EvalReport.from_rows(post_rows, True)


def load_eval_samples(entries) -> list:
    """Materialize (name, grade, image, annotation) rows for evaluation."""
    samples = []
    for entry in entries:
        name, img, anno = load_entry(entry)
        if anno is None:
            logger.warning("skipping %s: no annotation to score against", name)
            continue
        samples.append((name, entry.grade, img, anno))
    return samples


@dataclass(frozen=True)
class ExperimentResult:
    round_reports: tuple[tuple[EvalReport, EvalReport], ...]
    average: tuple[EvalReport, EvalReport]


def _average_reports(reports: list[EvalReport], postprocessed: bool) -> EvalReport:
    by_image = {}
    for report in reports:
        for row in report.rows:
            by_image.setdefault(row.image, []).append(row)
    rows = [
        EvalRow(
            image,
            rows[0].grade,
            float(np.mean([r.pixel_accuracy for r in rows])),
            float(np.mean([r.patch_accuracy for r in rows])),
            postprocessed,
        )
        for image, rows in by_image.items()
    ]
    return EvalReport.from_rows(rows, postprocessed)


def run_experiment(
    cfg: AppConfig,
    train_samples,
    test_samples,
    rounds: int = 1,
) -> ExperimentResult:
    """Train/evaluate ``rounds`` models with per-round derived seeds.

    Round ``r`` trains with seed ``mix_seed(master, r)`` where ``master``
    is the configured seed, then evaluates on ``test_samples``. The result
    carries every per-round report plus the per-image across-round average.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    master = cfg.pipeline.train_params.seed
    round_reports = []
    for r in range(rounds):
        seed = mix_seed(master, r)
        pipeline_cfg = replace(
            cfg.pipeline, train_params=replace(cfg.pipeline.train_params, seed=seed)
        )
        logger.info("round %d/%d: training with seed %d", r + 1, rounds, seed)
        model = train_hierarchical(train_samples, pipeline_cfg)
        round_reports.append(evaluate_model(model, test_samples, cfg.postproc))
    average = (
        _average_reports([raw for raw, _ in round_reports], False),
        _average_reports([post for _, post in round_reports], True),
    )
    return ExperimentResult(tuple(round_reports), average)


def sweep_variants(base: AppConfig, table: int, rounds: int) -> list[tuple[str, AppConfig, int]]:
    """(name, config, rounds) variants reproducing the published sweeps.

    1: single forest vs a 40/20/10 hierarchy; 2: normalization off/on;
    3: 10 vs 100 trees; 4: alternative window sets; 5: forest vs KNN;
    6: the default hierarchy repeated over rounds.
    """

    def with_levels(cfg: AppConfig, windows, filters, **pipeline_kw) -> AppConfig:
        lvl0 = cfg.pipeline.levels[0]
        levels = tuple(
            replace(lvl0, w=w, m=m) for w, m in zip(windows, filters)
        )
        return replace(cfg, pipeline=replace(cfg.pipeline, levels=levels, **pipeline_kw))

    def with_trees(cfg: AppConfig, trees: int) -> AppConfig:
        return replace(
            cfg,
            pipeline=replace(
                cfg.pipeline, train_params=replace(cfg.pipeline.train_params, trees=trees)
            ),
        )

    if table == 1:
        return [
            ("single_40", with_levels(base, [40], [7]), 1),
            ("hierarchical_40_20_10", with_levels(base, [40, 20, 10], [7, 5, 3]), 1),
        ]
    if table == 2:
        small = with_trees(with_levels(base, [40, 20, 10], [7, 5, 3]), 10)
        return [
            ("unnormalized", replace(small, pipeline=replace(small.pipeline, normalization_enabled=False)), 1),
            ("normalized", replace(small, pipeline=replace(small.pipeline, normalization_enabled=True)), 1),
        ]
    if table == 3:
        hier = with_levels(base, [40, 20, 10], [7, 5, 3])
        return [
            ("trees_10", with_trees(hier, 10), 1),
            ("trees_100", with_trees(hier, 100), 1),
        ]
    if table == 4:
        return [
            ("windows_40_20_10", with_levels(base, [40, 20, 10], [7, 5, 3]), 1),
            ("windows_20_10_5", with_levels(base, [20, 10, 5], [7, 5, 3]), 1),
            ("windows_40_20_10_5", with_levels(base, [40, 20, 10, 5], [7, 5, 3, 1]), 1),
        ]
    if table == 5:
        return [
            ("random_forest", with_levels(base, [21, 11, 5], [7, 5, 3], classifier="rf"), rounds),
            ("knn", with_levels(base, [21, 11, 5], [7, 5, 3], classifier="knn"), 1),
        ]
    if table == 6:
        return [("hierarchical_21_11_5", with_levels(base, [21, 11, 5], [7, 5, 3]), rounds)]
    raise ValueError(f"unknown table {table}; choose 1-6")
