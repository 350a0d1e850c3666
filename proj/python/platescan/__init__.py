"""License-plate detection via HOG features, a multiscale sliding-window scan
and a linear SVM, with integral-histogram acceleration.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from ._core import (  # noqa: F401
    BlockNorm,
    BoundingBox,
    Detection,
    EvalResult,
    HogConfig,
    LinearModel,
    PyramidConfig,
    ScanConfig,
    SceneSpec,
    SvmTrainConfig,
    best_match,
    descriptor_length,
    det_curve,
    evaluate,
    generate_scene,
    hog_descriptor,
    load_model,
    match_pair,
    non_max_suppression,
    resize,
    save_model,
    scan,
    score,
    strip_padding,
    to_grayscale,
    train_svm,
)

__all__ = [
    "BlockNorm",
    "BoundingBox",
    "Detection",
    "EvalResult",
    "HogConfig",
    "LinearModel",
    "PyramidConfig",
    "ScanConfig",
    "SceneSpec",
    "SvmTrainConfig",
    "best_match",
    "descriptor_length",
    "det_curve",
    "evaluate",
    "generate_scene",
    "hog_descriptor",
    "load_model",
    "match_pair",
    "non_max_suppression",
    "resize",
    "save_model",
    "scan",
    "score",
    "strip_padding",
    "to_grayscale",
    "train_svm",
]

__version__ = "0.1.0"
