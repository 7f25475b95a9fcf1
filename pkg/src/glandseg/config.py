"""Flat key=value run configuration.

Example file::

    windows=21,11,5
    filters=7,5,3
    trees=100
    bins1d=32
    bins2d=8
    glcm_levels=8
    knn_k=5
    classifier=rf
    normalize=true
    mode=fine
    seed=0
    postprocess=true
    postprocess_sigma=1.4
    postprocess_low=0.1
    postprocess_high=0.3
    postprocess_element=octagon
    postprocess_radius=3

Blank lines and ``#`` comments are ignored; unknown keys are an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .features import LevelConfig
from .forest import TrainParams
from .pipeline import PipelineConfig
from .postproc import PostprocParams

_KNOWN_KEYS = {
    "windows",
    "filters",
    "trees",
    "bins1d",
    "bins2d",
    "glcm_levels",
    "knn_k",
    "classifier",
    "normalize",
    "mode",
    "seed",
    "features_per_split",
    "min_samples_split",
    "max_depth",
    "reference",
    "postprocess",
    "postprocess_sigma",
    "postprocess_low",
    "postprocess_high",
    "postprocess_element",
    "postprocess_radius",
}

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class AppConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    postproc: PostprocParams = field(default_factory=PostprocParams)
    postprocess_enabled: bool = True


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _as_bool(key: str, value: str) -> bool:
    try:
        return _BOOL[value.lower()]
    except KeyError:
        raise ValueError(f"{key}: expected a boolean, got {value!r}") from None


def _as_int_list(key: str, value: str) -> list[int]:
    try:
        return [int(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"{key}: expected comma-separated integers, got {value!r}") from None


def _as_optional_int(key: str, value: str) -> int | None:
    if value.lower() in ("", "none", "null", "sqrt"):
        return None
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{key}: expected an integer or 'none', got {value!r}") from None


def build_config(values: dict[str, str]) -> AppConfig:
    windows = _as_int_list("windows", values.get("windows", "21,11,5"))
    filters = _as_int_list("filters", values.get("filters", "7,5,3"))
    if len(windows) != len(filters):
        raise ValueError(
            f"windows and filters must have equal length, got {len(windows)} and {len(filters)}"
        )
    bins1d = int(values.get("bins1d", "32"))
    bins2d = int(values.get("bins2d", "8"))
    glcm_levels = int(values.get("glcm_levels", "8"))
    levels = tuple(
        LevelConfig(w=w, m=m, bins1d=bins1d, bins2d=bins2d, glcm_levels=glcm_levels)
        for w, m in zip(windows, filters)
    )
    train = TrainParams(
        trees=int(values.get("trees", "100")),
        features_per_split=_as_optional_int(
            "features_per_split", values.get("features_per_split", "none")
        ),
        min_samples_split=int(values.get("min_samples_split", "2")),
        max_depth=_as_optional_int("max_depth", values.get("max_depth", "none")),
        seed=int(values.get("seed", "0")),
    )
    pipeline = PipelineConfig(
        levels=levels,
        train_params=train,
        normalization_enabled=_as_bool("normalize", values.get("normalize", "true")),
        prediction_mode=values.get("mode", "fine"),
        classifier=values.get("classifier", "rf"),
        knn_k=int(values.get("knn_k", "5")),
        reference_image=values.get("reference") or None,
    )
    postproc = PostprocParams(
        gaussian_sigma=float(values.get("postprocess_sigma", "1.4")),
        low_fraction=float(values.get("postprocess_low", "0.1")),
        high_fraction=float(values.get("postprocess_high", "0.3")),
        element=values.get("postprocess_element", "octagon"),
        radius=int(values.get("postprocess_radius", "3")),
    )
    return AppConfig(
        pipeline=pipeline,
        postproc=postproc,
        postprocess_enabled=_as_bool("postprocess", values.get("postprocess", "true")),
    )


def load_config(path=None) -> AppConfig:
    """Build the run configuration from a file, or the defaults for None."""
    if path is None:
        return AppConfig()
    with open(path) as fh:
        return build_config(parse_config_text(fh.read()))
