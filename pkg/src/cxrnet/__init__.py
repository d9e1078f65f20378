"""Chest X-ray classification pipeline built from first principles.

Subpackages: :mod:`cxrnet.preproc` (image operators), :mod:`cxrnet.nn`
(layers, optimizer, gradient checking), :mod:`cxrnet.model` (network
assembly and training), :mod:`cxrnet.data` (datasets and batching),
:mod:`cxrnet.metrics` (per-class evaluation), :mod:`cxrnet.persistence`
(checkpoints) and :mod:`cxrnet.cli` (the ``cxrnet`` command).
"""

from .preproc import (
    LtpMaps,
    adjust_brightness_contrast,
    histogram_equalize,
    local_ternary_pattern,
    adaptive_threshold_gaussian,
    hybrid_preprocess,
)
from .nn import Adam, grad_check, softmax, softmax_cross_entropy
from .model import (
    InceptionSpec,
    LayerSpec,
    Network,
    NetworkSpec,
    build_proposed_cnn,
    train_epoch,
)
from .data import BatchPlan, DatasetManifest, batch_stream, scan_dataset, stratified_split
from .metrics import confusion, f1_score, macro_report, precision_recall_f1, roc_auc
from .persistence import load, save
from .config import RunConfig

__version__ = "0.1.0"

__all__ = [
    "LtpMaps",
    "adjust_brightness_contrast",
    "histogram_equalize",
    "local_ternary_pattern",
    "adaptive_threshold_gaussian",
    "hybrid_preprocess",
    "Adam",
    "grad_check",
    "softmax",
    "softmax_cross_entropy",
    "InceptionSpec",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "build_proposed_cnn",
    "train_epoch",
    "BatchPlan",
    "DatasetManifest",
    "batch_stream",
    "scan_dataset",
    "stratified_split",
    "confusion",
    "f1_score",
    "macro_report",
    "precision_recall_f1",
    "roc_auc",
    "load",
    "save",
    "RunConfig",
    "__version__",
]
