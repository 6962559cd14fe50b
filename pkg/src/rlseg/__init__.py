"""Class-incremental semantic-segmentation engine.

A frozen random expansion layer lifts encoder features into a wide
space; a closed-form ridge classifier over that space is updated
recursively, one pass per incremental step, with pseudo-labeling to
counter background drift and IoU-based scoring throughout.
"""

from .analytic import (
    IGNORE,
    AnalyticState,
    LabelMatrix,
    crls_update,
    expand_classes,
    fit_initial,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .errors import ConfigError, DataError, NumericError, RlsegError
from .expansion import RhlProjector, build_projector, expand
from .kernels import BACKEND
from .metrics import SegMetrics, confusion_accumulate, iou_from_confusion
from .protocol import (
    RunConfig,
    StepBatch,
    class_schedule,
    mask_labels,
    run_from_config,
    run_steps,
    synth_generate,
)
from .pseudo2d import relabel_2d, uncertainty_2d
from .pseudo3d import Neighborhoods, bald_uncertainty, knn_cosine, relabel_3d

__version__ = "0.1.0"

__all__ = [
    "AnalyticState",
    "BACKEND",
    "ConfigError",
    "DataError",
    "IGNORE",
    "LabelMatrix",
    "Neighborhoods",
    "NumericError",
    "RhlProjector",
    "RlsegError",
    "RunConfig",
    "SegMetrics",
    "StepBatch",
    "bald_uncertainty",
    "build_projector",
    "class_schedule",
    "confusion_accumulate",
    "crls_update",
    "expand",
    "expand_classes",
    "fit_initial",
    "iou_from_confusion",
    "knn_cosine",
    "load_checkpoint",
    "mask_labels",
    "predict",
    "relabel_2d",
    "relabel_3d",
    "run_from_config",
    "run_steps",
    "save_checkpoint",
    "synth_generate",
    "uncertainty_2d",
]
