"""Quality-aware template matching."""

from ._core import (
    DEFAULT_ALPHA,
    FeatureMap,
    FormatError,
    InvalidArgument,
    IoError,
    QatmError,
    ShapeMismatch,
    best_window,
    calibrate_alpha,
    cosine_similarity,
    extract_raw_patches,
    grad_alpha,
    grad_rho,
    grouped_max,
    grouped_softmax,
    iou,
    likelihoods,
    load_feature_file,
    match,
    quality_maps,
    response_roc,
    save_feature_file,
    set_worker_count,
    worker_count,
)

__all__ = [
    "DEFAULT_ALPHA",
    "FeatureMap",
    "FormatError",
    "InvalidArgument",
    "IoError",
    "QatmError",
    "ShapeMismatch",
    "best_window",
    "calibrate_alpha",
    "cosine_similarity",
    "extract_raw_patches",
    "grad_alpha",
    "grad_rho",
    "grouped_max",
    "grouped_softmax",
    "iou",
    "likelihoods",
    "load_feature_file",
    "match",
    "quality_maps",
    "response_roc",
    "save_feature_file",
    "set_worker_count",
    "worker_count",
]
