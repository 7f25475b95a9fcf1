"""Command line interface: train, predict, evaluate, experiment, features."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import AppConfig, load_config
from .dataset import load_dataset, load_training_samples
from .experiment import evaluate_model, load_eval_samples, run_experiment, sweep_variants
from .features import assemble_features, feature_names
from .imaging import load_image_rgb, pad_replicate, patch_grid, save_mask_png
from .metrics import write_reports_csv
from .modelio import load_model, save_model
from .pipeline import predict_image, train_hierarchical
from .postproc import postprocess

logger = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".bmp", ".png")


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    pipeline_cfg = cfg.pipeline
    if args.seed is not None:
        pipeline_cfg = replace(
            pipeline_cfg, train_params=replace(pipeline_cfg.train_params, seed=args.seed)
        )
    if args.no_normalize:
        pipeline_cfg = replace(pipeline_cfg, normalization_enabled=False)
    if args.reference is not None:
        pipeline_cfg = replace(pipeline_cfg, reference_image=args.reference)
    entries = load_dataset(args.data, args.split)
    samples = load_training_samples(entries)
    if not samples:
        raise SystemExit(f"no annotated {args.split!r} images under {args.data}")
    model = train_hierarchical(samples, pipeline_cfg)
    save_model(model, args.out)
    logger.info("model written to %s", args.out)
    return 0


def _input_images(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    if path.is_dir():
        return sorted(
            p
            for p in path.iterdir()
            if p.suffix.lower() in _IMAGE_SUFFIXES and not p.stem.endswith("_anno")
        )
    raise SystemExit(f"input not found: {path}")


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    cfg = load_config(args.config)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in _input_images(args.input):
        img = load_image_rgb(path)
        mask = predict_image(model, img, mode=args.mode)
        if not args.no_postprocess:
            mask = postprocess(mask, cfg.postproc)
        out_path = args.out / f"{path.stem}_pred.png"
        save_mask_png(mask, out_path)
        logger.info("wrote %s", out_path)
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    cfg = load_config(args.config)
    entries = load_dataset(args.data, args.split)
    samples = load_eval_samples(entries)
    if not samples:
        raise SystemExit(f"no annotated {args.split!r} images under {args.data}")
    raw, post = evaluate_model(model, samples, cfg.postproc, mode=args.mode)
    write_reports_csv([raw, post], args.report)
    print(f"raw:           pixel={raw.average_pixel_accuracy:.5f} patch={raw.average_patch_accuracy:.5f}")
    print(f"postprocessed: pixel={post.average_pixel_accuracy:.5f} patch={post.average_patch_accuracy:.5f}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    tables = [int(t) for t in args.tables.split(",") if t.strip()]
    train_entries = load_dataset(args.data, args.train_split)
    train_samples = load_training_samples(train_entries)
    test_samples = []
    for split in args.test_splits.split(","):
        test_samples.extend(load_eval_samples(load_dataset(args.data, split.strip())))
    if not train_samples or not test_samples:
        raise SystemExit("experiment needs annotated train and test images")
    args.report_dir.mkdir(parents=True, exist_ok=True)
    for table in tables:
        for name, variant_cfg, rounds in sweep_variants(cfg, table, args.rounds):
            logger.info("table %d variant %s (%d round(s))", table, name, rounds)
            result = run_experiment(variant_cfg, train_samples, test_samples, rounds)
            out_dir = args.report_dir / f"table{table}"
            out_dir.mkdir(parents=True, exist_ok=True)
            for r, (raw, post) in enumerate(result.round_reports, start=1):
                write_reports_csv([raw, post], out_dir / f"{name}_round{r}.csv")
            write_reports_csv(list(result.average), out_dir / f"{name}_average.csv")
            raw_avg, post_avg = result.average
            print(
                f"table{table}/{name}: pixel={raw_avg.average_pixel_accuracy:.5f} "
                f"patch={raw_avg.average_patch_accuracy:.5f} "
                f"(post: {post_avg.average_pixel_accuracy:.5f}/{post_avg.average_patch_accuracy:.5f})"
            )
    return 0


def _cmd_features(args) -> int:
    cfg = load_config(args.config)
    lvl = cfg.pipeline.levels[0]
    img = load_image_rgb(args.input)
    padded = pad_replicate(img, lvl.w)
    refs = patch_grid(padded.shape[0], padded.shape[1], lvl.w)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "y0", "w"] + feature_names(lvl))
        for ref in refs:
            vec = assemble_features(padded[ref.y0 : ref.y0 + lvl.w, ref.x0 : ref.x0 + lvl.w], lvl)
            writer.writerow([ref.x0, ref.y0, ref.w] + [repr(float(v)) for v in vec])
    logger.info("wrote %d feature rows to %s", len(refs), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glandseg",
        description="Gland segmentation in colon histology images via a hierarchical patch cascade.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a dataset split")
    p.add_argument("--data", type=Path, required=True, help="dataset directory")
    p.add_argument("--split", default="train", help="split to train on (default: train)")
    _add_config_arg(p)
    p.add_argument("--out", type=Path, required=True, help="model output path")
    p.add_argument("--seed", type=int, default=None, help="override the training seed")
    p.add_argument("--no-normalize", action="store_true", help="disable stain normalization")
    p.add_argument("--reference", default=None, help="normalization reference image name")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="segment one image or a directory of images")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True, help="image file or directory")
    p.add_argument("--out", type=Path, required=True, help="output directory for masks")
    _add_config_arg(p)
    p.add_argument("--mode", choices=("fine", "coarse-majority"), default=None)
    p.add_argument("--no-postprocess", action="store_true", help="skip edge-band closing")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a model against an annotated split")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--split", required=True, help="e.g. testA or testB")
    _add_config_arg(p)
    p.add_argument("--mode", choices=("fine", "coarse-majority"), default=None)
    p.add_argument("--report", type=Path, required=True, help="CSV report path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("experiment", help="run the published comparison sweeps")
    _add_config_arg(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--train-split", default="train")
    p.add_argument("--test-splits", default="testA,testB", help="comma-separated test splits")
    p.add_argument("--rounds", type=int, default=5, help="rounds for the repeated runs")
    p.add_argument("--tables", default="1,2,3,4,5,6", help="which sweeps to run")
    p.add_argument("--report-dir", type=Path, required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("features", help="dump level-0 patch features to CSV")
    p.add_argument("--in", dest="input", type=Path, required=True, help="input image")
    _add_config_arg(p)
    p.add_argument("--out", type=Path, required=True, help="feature CSV path")
    p.set_defaults(func=_cmd_features)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
