"""Closed-form graph convolution for node classification and subspace clustering."""

from .clustering import build_affinity, cluster, fit_coefficients, spectral_segment
from .graph import SparseAdjacency, knn_graph, load_edge_list, renormalize
from .propagation import EmbeddingCache, PropagationConfig, propagate
from .semi_supervised import LabeledSplit, build_targets, fit, grid_search, predict

__version__ = "0.1.0"

__all__ = [
    "EmbeddingCache",
    "LabeledSplit",
    "PropagationConfig",
    "SparseAdjacency",
    "build_affinity",
    "build_targets",
    "cluster",
    "fit",
    "fit_coefficients",
    "grid_search",
    "knn_graph",
    "load_edge_list",
    "predict",
    "propagate",
    "renormalize",
    "spectral_segment",
]
