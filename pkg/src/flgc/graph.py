"""Undirected graphs, kNN construction and the renormalized propagation matrix."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import DegenerateInput, IndexOutOfRange, InputError, ParseError
from .numerics import as_dense

_KNN_CHUNK = 1024


@dataclass(frozen=True)
class SparseAdjacency:
    """Symmetric, loop-free weighted adjacency stored as CSR.

    Build one with :meth:`from_edges` or :func:`knn_graph`; the constructor
    validates an existing sparse matrix.
    """

    matrix: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        if m.shape[0] != m.shape[1]:
            raise InputError(f"adjacency must be square, got {m.shape}")
        if m.nnz and np.any(m.data <= 0):
            raise InputError("edge weights must be positive")
        if m.diagonal().any():
            raise InputError("adjacency must not contain self-loops")
        if (m != m.T).nnz:
            raise InputError("adjacency must be symmetric")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_edges(cls, node_count, edges):
        """Build from ``(i, j[, weight])`` tuples; each undirected edge may be
        listed in either or both directions. Later duplicates overwrite."""
        weights = {}
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            for v in (i, j):
                if not 0 <= v < node_count:
                    raise IndexOutOfRange(f"node id {v} outside [0, {node_count})")
            if i == j:
                raise InputError(f"self-loop on node {i}")
            weights[(min(i, j), max(i, j))] = w
        return cls(_symmetric_csr(node_count, weights))

    @property
    def node_count(self):
        return self.matrix.shape[0]

    @property
    def edge_count(self):
        return self.matrix.nnz // 2

    def edges(self):
        """Undirected edges as ``(i, j, weight)`` with ``i < j``."""
        upper = sp.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [(int(upper.row[t]), int(upper.col[t]), float(upper.data[t])) for t in order]

    def degrees(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _symmetric_csr(n, weights):
    if not weights:
        return sp.csr_matrix((n, n), dtype=np.float64)
    ij = np.array(list(weights.keys()), dtype=np.int64)
    w = np.array(list(weights.values()), dtype=np.float64)
    rows = np.concatenate([ij[:, 0], ij[:, 1]])
    cols = np.concatenate([ij[:, 1], ij[:, 0]])
    return sp.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class PropagationMatrix:
    """P = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}, stored sparse."""

    matrix: sp.csr_matrix

    @property
    def node_count(self):
        return self.matrix.shape[0]

    def toarray(self):
        return self.matrix.toarray()


def renormalize(adj: SparseAdjacency) -> PropagationMatrix:
    n = adj.node_count
    a_tilde = adj.matrix + sp.identity(n, format="csr")
    d_tilde = np.asarray(a_tilde.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(d_tilde))
    p = (inv_sqrt @ a_tilde @ inv_sqrt).tocsr()
    # D^{-1/2} A D^{-1/2} is symmetric in exact arithmetic; make it exactly so.
    p = ((p + p.T) * 0.5).tocsr()
    p.sort_indices()
    return PropagationMatrix(p)


def default_k(n_samples, n_classes):
    """Neighborhood size floor(N / 5C) used for regular (non-graph) data."""
    return max(1, n_samples // (5 * n_classes))


def knn_graph(features, k) -> SparseAdjacency:
    """Union-symmetrized k-nearest-neighbour graph with binary weights.

    Neighbours are ranked by Euclidean distance, self excluded; equal
    distances are broken by the smaller node index.
    """
    x = as_dense(features, "features")
    n = x.shape[0]
    if n < 2:
        raise DegenerateInput("kNN graph needs at least two points")
    if not 1 <= k < n:
        raise InputError(f"k must lie in [1, {n - 1}], got {k}")
    rows = []
    for start in range(0, n, _KNN_CHUNK):
        stop = min(start + _KNN_CHUNK, n)
        d = cdist(x[start:stop], x, metric="sqeuclidean")
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        rows.append(np.argsort(d, axis=1, kind="stable")[:, :k])
    nbrs = np.vstack(rows)
    src = np.repeat(np.arange(n), k)
    directed = sp.csr_matrix((np.ones(n * k), (src, nbrs.ravel())), shape=(n, n))
    union = directed.maximum(directed.T).tocsr()
    return SparseAdjacency(union)


_SPLIT = re.compile(r"[\s,]+")


def parse_edge_list(lines, node_count):
    """Parse ``i j [weight]`` records.

    Returns ``(adjacency, dropped_self_loops)``. Blank lines and lines
    starting with ``#`` are skipped.
    """
    weights = {}
    dropped = 0
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(text) if f]
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 'i j [weight]', got {text!r}", line=lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(f"node ids must be integers, got {text!r}", line=lineno) from None
        try:
            w = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError:
            raise ParseError(f"bad weight {fields[2]!r}", line=lineno, column=3) from None
        if not (np.isfinite(w) and w > 0):
            raise ParseError(f"weight must be positive, got {w}", line=lineno, column=3)
        for v in (i, j):
            if not 0 <= v < node_count:
                raise IndexOutOfRange(f"line {lineno}: node id {v} outside [0, {node_count})")
        if i == j:
            dropped += 1
            continue
        weights[(min(i, j), max(i, j))] = w
    return SparseAdjacency(_symmetric_csr(node_count, weights)), dropped


def load_edge_list(path, node_count) -> SparseAdjacency:
    """Read an edge-list file; self-loops are dropped with a warning."""
    with open(Path(path), encoding="utf-8") as fh:
        adj, dropped = parse_edge_list(fh, node_count)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} self-loop(s)", stacklevel=2)
    return adj
