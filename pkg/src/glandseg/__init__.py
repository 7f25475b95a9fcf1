"""Gland segmentation for colon histology images.

Patches of a stain-normalized image are described by intensity histograms,
mean/std-filter joint histograms, and Haralick texture features, then
classified Gland/NonGland/Mix by a cascade of random forests that re-patch
Mix windows at ever finer scales. Post-processing closes the segmentation
with a dilated edge band.
"""

from .colornorm import ChannelStats, reinhard_normalize, stats_from_image
from .config import AppConfig, load_config
from .dataset import DatasetEntry, load_dataset
from .experiment import ExperimentResult, evaluate_model, run_experiment
from .features import LevelConfig, assemble_features, haralick14
from .forest import KnnClassifier, RandomForest, TrainParams, knn_predict, train_forest
from .imaging import (
    Label,
    PatchRef,
    binarize_ground_truth,
    load_image_rgb,
    majority_label,
    pad_replicate,
    patch_grid,
    patch_label,
    save_mask_png,
    sub_patch_offsets,
)
from .metrics import EvalReport, EvalRow, patch_accuracy, pixel_accuracy
from .modelio import ModelFormatError, load_model, save_model
from .pipeline import (
    HierarchicalModel,
    PipelineConfig,
    label_grid,
    predict_image,
    predict_image_with_labels,
    train_hierarchical,
)
from .postproc import PostprocParams, canny_edges, dilate, postprocess, structuring_element

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "ChannelStats",
    "DatasetEntry",
    "EvalReport",
    "EvalRow",
    "ExperimentResult",
    "HierarchicalModel",
    "KnnClassifier",
    "Label",
    "LevelConfig",
    "ModelFormatError",
    "PatchRef",
    "PipelineConfig",
    "PostprocParams",
    "RandomForest",
    "TrainParams",
    "assemble_features",
    "binarize_ground_truth",
    "canny_edges",
    "dilate",
    "evaluate_model",
    "haralick14",
    "knn_predict",
    "label_grid",
    "load_config",
    "load_dataset",
    "load_image_rgb",
    "load_model",
    "majority_label",
    "pad_replicate",
    "patch_accuracy",
    "patch_grid",
    "patch_label",
    "pixel_accuracy",
    "postprocess",
    "predict_image",
    "predict_image_with_labels",
    "reinhard_normalize",
    "run_experiment",
    "save_mask_png",
    "save_model",
    "stats_from_image",
    "structuring_element",
    "sub_patch_offsets",
    "train_forest",
    "train_hierarchical",
]
