"""Collocative learning for periodic 1D biosignals.

Signals become multi-view relation tensors, a compact convnet with periodic
attention gates classifies them, and saliency is decoded back into wave-level
ratings, rankings and decision trees.
"""

from .cag import AttentionMask, CagParams, build_mask, estimate_period, regulate
from .config import RunConfig, dump_config, load_config
from .decoding import MembershipMatrix, membership_matrix, pairwise_rating, unary_rating
from .evaluation import Metrics, compute_metrics, cross_validate, kfold_indices
from .network import Checkpoint, Model, ModelConfig, load_checkpoint, save_checkpoint, train
from .pipeline import ExperimentResult, run_experiment
from .saliency import SaliencyMap, collocative_saliency, fuse_maps
from .signal import (
    GENRES,
    LABELS,
    EcgRecord,
    SegmentSeries,
    SyntheticParams,
    WaveAnnotation,
    annotate_waves,
    normalize,
    segment,
    synthesize_ecg,
)
from .tensor import MULTI_VIEW, CollocativeTensor, ViewSpec, build_tensor

__version__ = "0.1.0"

__all__ = [
    "AttentionMask", "CagParams", "Checkpoint", "CollocativeTensor", "EcgRecord",
    "ExperimentResult", "GENRES", "LABELS", "MULTI_VIEW", "MembershipMatrix", "Metrics",
    "Model", "ModelConfig", "RunConfig", "SaliencyMap", "SegmentSeries", "SyntheticParams",
    "ViewSpec", "WaveAnnotation", "annotate_waves", "build_mask", "build_tensor",
    "collocative_saliency", "compute_metrics", "cross_validate", "dump_config",
    "estimate_period", "fuse_maps", "kfold_indices", "load_checkpoint", "load_config",
    "membership_matrix", "normalize", "pairwise_rating", "regulate", "run_experiment",
    "save_checkpoint", "segment", "synthesize_ecg", "train", "unary_rating",
]
