"""Micro-action recognition toolkit.

A compact research codebase for fine-grained whole-body micro-action
recognition: an SE-gated, temporally-shifted residual video backbone, a
joint label-embedding training objective, a hierarchical coarse/fine
evaluation suite, and a dual-branch multi-task emotion application, plus a
procedural video generator that makes the whole pipeline testable on CPU.
"""

__version__ = "0.1.0"

from .backbone import MANet, ModelConfig, desk_model_config, temporal_shift
from .datagen import ClipTensor, GenSpec, generate_dataset, sample_frames, segment_indices
from .embedding import WordVectorTable, embed_label, load_word_vectors
from .metrics import MetricsReport, build_report, confusion_matrix
from .taxonomy import LabelTaxonomy, load_default_taxonomy, load_taxonomy
from .trainer import TrainConfig, evaluate, predict, train

__all__ = [
    "MANet",
    "ModelConfig",
    "desk_model_config",
    "temporal_shift",
    "ClipTensor",
    "GenSpec",
    "generate_dataset",
    "sample_frames",
    "segment_indices",
    "WordVectorTable",
    "embed_label",
    "load_word_vectors",
    "MetricsReport",
    "build_report",
    "confusion_matrix",
    "LabelTaxonomy",
    "load_default_taxonomy",
    "load_taxonomy",
    "TrainConfig",
    "evaluate",
    "predict",
    "train",
    "__version__",
]
