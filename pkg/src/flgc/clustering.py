"""Subspace clustering on propagated features.

The self-expressive coefficients minimize

    0.5 * ||H^T Z - X^T||_F^2 + 0.5 * lam * ||Z||_F^2,

giving ``Z = (H H^T + lam I)^{-1} H X^T``. The coefficients are turned into
a symmetric affinity and segmented with normalized spectral clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InputError, InvalidLambda, ShapeMismatch
from .graph import PropagationMatrix
from .numerics import as_dense, kmeans, spd_solve, sym_eig_smallest
from .propagation import PropagationConfig, propagate

DEFAULT_RESTARTS = 20


@dataclass(frozen=True)
class AffinityCoefficients:
    matrix: np.ndarray
    lam: float


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    cluster_count: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.cluster_count):
            raise InputError(f"cluster ids must lie in [0, {self.cluster_count})")
        object.__setattr__(self, "labels", labels)


def fit_coefficients(h, x, lam) -> AffinityCoefficients:
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidLambda(f"lambda must be positive and finite, got {lam}")
    h = as_dense(h, "embedding")
    x = as_dense(x, "features")
    if h.shape != x.shape:
        raise ShapeMismatch(f"embedding {h.shape} and features {x.shape} differ in shape")
    n = h.shape[0]
    z = spd_solve(h @ h.T + lam * np.eye(n), h @ x.T)
    return AffinityCoefficients(z, float(lam))


def self_expressive_loss(h, x, z, lam):
    r = h.T @ z - x.T
    return 0.5 * float(np.sum(r * r)) + 0.5 * lam * float(np.sum(z * z))


def stationarity_residual(h, x, z, lam):
    """Gradient ``H H^T Z - H X^T + lam Z`` of :func:`self_expressive_loss`."""
    return h @ (h.T @ z) - h @ x.T + lam * z


def build_affinity(z):
    """Symmetric, nonnegative, zero-diagonal affinity from coefficients.

    ``(|Z| + |Z^T|) / 2`` with the diagonal zeroed, each row divided by its
    maximum (rows of zeros are left alone), then symmetrized again.
    """
    if isinstance(z, AffinityCoefficients):
        z = z.matrix
    z = as_dense(z, "coefficients")
    a = 0.5 * (np.abs(z) + np.abs(z.T))
    np.fill_diagonal(a, 0.0)
    row_max = a.max(axis=1, keepdims=True)
    safe = np.where(row_max > 0, row_max, 1.0)
    a = np.where(row_max > 0, a / safe, 0.0)
    return 0.5 * (a + a.T)


def spectral_embedding(affinity, n_clusters):
    """Rows of the bottom eigenvectors of the normalized Laplacian,
    scaled to unit length (all-zero rows stay at the origin)."""
    a = as_dense(affinity, "affinity")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ShapeMismatch("affinity must be square")
    if np.any(a < 0):
        raise InputError("affinity must be nonnegative")
    if not np.any(a):
        raise DegenerateInput("affinity is identically zero")
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros(n)
    inv_sqrt[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    lap = np.eye(n) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    lap = 0.5 * (lap + lap.T)
    _, vecs = sym_eig_smallest(lap, n_clusters)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.where(norms > 0, vecs / np.where(norms > 0, norms, 1.0), 0.0)


def spectral_segment(affinity, n_clusters, seed=0, restarts=DEFAULT_RESTARTS) -> ClusterAssignment:
    n = np.shape(affinity)[0]
    if n_clusters < 2:
        raise InputError("spectral segmentation needs at least two clusters")
    if n < n_clusters:
        raise InputError(f"{n} nodes cannot form {n_clusters} clusters")
    emb = spectral_embedding(affinity, n_clusters)
    labels = kmeans(emb, n_clusters, restarts=restarts, seed=seed)
    return ClusterAssignment(labels, n_clusters)


def cluster_embedding(h, x, lam, n_clusters, seed=0, restarts=DEFAULT_RESTARTS):
    z = fit_coefficients(h, x, lam)
    return spectral_segment(build_affinity(z), n_clusters, seed=seed, restarts=restarts)


def cluster(p: PropagationMatrix, x, cfg: PropagationConfig, lam, n_clusters, seed=0,
            restarts=DEFAULT_RESTARTS) -> ClusterAssignment:
    """Propagate, solve for coefficients, build the affinity, segment."""
    h = propagate(p, x, cfg)
    return cluster_embedding(h, x, lam, n_clusters, seed=seed, restarts=restarts)
