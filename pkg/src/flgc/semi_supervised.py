"""Transductive node classification with a closed-form ridge solve.

Given an embedding ``H`` and one-hot targets on the labeled nodes, the
weights minimizing

    0.5 * ||M^{1/2} (H W - Y)||_F^2 + 0.5 * lam * ||W||_F^2

are ``W = (H^T M H + lam I)^{-1} H^T M Y`` where ``M`` masks the labeled
rows. Because ``M`` is a 0/1 diagonal, only the labeled rows of ``H`` and
``Y`` enter the solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGrid, IndexOutOfRange, InputError, InvalidLambda, ShapeMismatch
from .numerics import as_dense, derive_rng, spd_solve
from .propagation import EmbeddingCache


@dataclass(frozen=True)
class LabeledSplit:
    """Labeled node ids together with their class ids."""

    labeled_ids: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        ids = np.asarray(self.labeled_ids, dtype=np.int64).ravel()
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if ids.size == 0:
            raise InputError("a labeled split needs at least one labeled node")
        if ids.shape != labels.shape:
            raise ShapeMismatch("labeled_ids and labels differ in length")
        if np.unique(ids).size != ids.size:
            raise InputError("labeled_ids contain duplicates")
        if ids.min() < 0:
            raise IndexOutOfRange("negative node id in labeled_ids")
        if self.class_count < 1 or labels.min() < 0 or labels.max() >= self.class_count:
            raise InputError(f"class ids must lie in [0, {self.class_count})")
        for name, arr in (("labeled_ids", ids), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "class_count", int(self.class_count))

    @classmethod
    def from_truth(cls, ids, truth, class_count):
        ids = np.asarray(ids, dtype=np.int64)
        return cls(ids, np.asarray(truth)[ids], class_count)

    def __len__(self):
        return self.labeled_ids.size


@dataclass(frozen=True)
class ClassifierWeights:
    matrix: np.ndarray
    lam: float


def build_targets(split: LabeledSplit, n_nodes):
    """N x C target matrix: one-hot rows for labeled nodes, zeros elsewhere."""
    if split.labeled_ids.max() >= n_nodes:
        raise IndexOutOfRange(f"labeled id {split.labeled_ids.max()} >= node count {n_nodes}")
    y = np.zeros((n_nodes, split.class_count))
    y[split.labeled_ids, split.labels] = 1.0
    return y


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidLambda(f"lambda must be positive and finite, got {lam}")
    return float(lam)


def ridge_solve(h_rows, y_rows, lam):
    """Minimizer of ``0.5||h W - y||^2 + 0.5 lam ||W||^2``.

    Solves the D x D normal equations, or the equivalent n x n dual system
    ``W = h^T (h h^T + lam I)^{-1} y`` when there are fewer rows than columns.
    """
    n, d = h_rows.shape
    if n < d:
        return h_rows.T @ spd_solve(h_rows @ h_rows.T + lam * np.eye(n), y_rows)
    return spd_solve(h_rows.T @ h_rows + lam * np.eye(d), h_rows.T @ y_rows)


def fit(h, targets, split: LabeledSplit, lam) -> ClassifierWeights:
    """Closed-form classifier weights (D x C)."""
    lam = _check_lambda(lam)
    h = as_dense(h, "embedding")
    targets = as_dense(targets, "targets")
    if targets.shape != (h.shape[0], split.class_count):
        raise ShapeMismatch(
            f"targets shape {targets.shape} != ({h.shape[0]}, {split.class_count})"
        )
    if split.labeled_ids.max() >= h.shape[0]:
        raise IndexOutOfRange("labeled id beyond embedding rows")
    ids = split.labeled_ids
    w = ridge_solve(h[ids], targets[ids], lam)
    return ClassifierWeights(w, lam)


def scores(h, weights: ClassifierWeights):
    h = as_dense(h, "embedding")
    if h.shape[1] != weights.matrix.shape[0]:
        raise ShapeMismatch(f"embedding has {h.shape[1]} columns, weights {weights.matrix.shape[0]} rows")
    return h @ weights.matrix


def predict(h, weights: ClassifierWeights):
    """Class with the highest score per node; ties go to the smaller index."""
    return np.argmax(scores(h, weights), axis=1)


def masked_loss(h, targets, labeled_ids, w, lam):
    """The regularized, masked squared loss minimized by :func:`fit`."""
    r = h[labeled_ids] @ w - targets[labeled_ids]
    return 0.5 * float(np.sum(r * r)) + 0.5 * lam * float(np.sum(w * w))


def stationarity_residual(h, targets, labeled_ids, w, lam):
    """Gradient ``H^T M H W - H^T M Y + lam W`` of :func:`masked_loss`."""
    hl = h[labeled_ids]
    return hl.T @ (hl @ w) - hl.T @ targets[labeled_ids] + lam * w


# --------------------------------------------------------------------------
# hyperparameter search


@dataclass(frozen=True)
class ValidationFold:
    """Training part of a split plus held-out labeled nodes used for scoring."""

    train: LabeledSplit
    val_ids: np.ndarray
    val_labels: np.ndarray


def validation_folds(split: LabeledSplit, fraction=0.2, seed=0):
    """Rotate a stratified held-out share of the labeled nodes.

    The labeled set is cut into ``round(1 / fraction)`` folds, each holding
    roughly ``fraction`` of every class; each fold serves once as the
    validation set. Folds whose training part would be empty are skipped.
    """
    if not 0 < fraction < 1:
        raise InputError("validation fraction must lie in (0, 1)")
    n_folds = max(2, int(round(1.0 / fraction)))
    rng = derive_rng(seed, 0)
    fold_of = np.empty(len(split), dtype=np.int64)
    for c in range(split.class_count):
        members = np.flatnonzero(split.labels == c)
        members = members[rng.permutation(members.size)]
        fold_of[members] = np.arange(members.size) % n_folds
    out = []
    for f in range(n_folds):
        held = fold_of == f
        if not held.any() or held.all():
            continue
        train = LabeledSplit(split.labeled_ids[~held], split.labels[~held], split.class_count)
        out.append(ValidationFold(train, split.labeled_ids[held], split.labels[held]))
    return out


@dataclass
class GridResult:
    lam: float
    alpha: float
    steps: int
    val_acc: float
    table: list = field(default_factory=list)
    propagations: int = 0


def log_grid(lo, hi, n):
    """``n`` log-spaced values from ``lo`` to ``hi`` inclusive."""
    if n == 1:
        return [float(lo)]
    return [float(v) for v in np.exp(np.linspace(math.log(lo), math.log(hi), n))]


def _fold_correct(h, folds, lams):
    """Correct-prediction counts per lambda, pooled over folds."""
    d = h.shape[1]
    c = folds[0].train.class_count
    counts = np.zeros(len(lams), dtype=np.int64)
    sizes = {len(f.train) for f in folds}
    if min(sizes) >= d:
        # stack the normal equations of all folds and solve them together
        hts = [h[f.train.labeled_ids] for f in folds]
        grams = np.stack([ht.T @ ht for ht in hts])
        rhs = np.stack([ht.T @ np.eye(c)[f.train.labels] for ht, f in zip(hts, folds)])
        val_rows = np.concatenate([h[f.val_ids] for f in folds])
        val_fold = np.concatenate([np.full(f.val_ids.size, i) for i, f in enumerate(folds)])
        val_truth = np.concatenate([f.val_labels for f in folds])
        eye = np.eye(d)
        for li, lam in enumerate(lams):
            w = spd_solve(grams + lam * eye, rhs)
            s = np.einsum("vd,vdc->vc", val_rows, w[val_fold])
            counts[li] = int(np.sum(np.argmax(s, axis=1) == val_truth))
        return counts
    for f in folds:
        targets = np.eye(c)[f.train.labels]
        hl = h[f.train.labeled_ids]
        for li, lam in enumerate(lams):
            w = ridge_solve(hl, targets, lam)
            counts[li] += int(np.sum(np.argmax(h[f.val_ids] @ w, axis=1) == f.val_labels))
    return counts


def grid_search(p, x, folds, lambdas, alphas, steps, cache=None) -> GridResult:
    """Exhaustive search over ``lambdas x alphas x steps``.

    Every cell is scored by validation accuracy pooled over ``folds`` (one or
    many :class:`ValidationFold`, possibly drawn from several random splits).
    Ties prefer smaller ``steps``, then larger ``lambda``, then smaller
    ``alpha``. Embeddings come from an :class:`EmbeddingCache`, so each
    ``(alpha, steps)`` pair is propagated once regardless of the number of
    lambdas.
    """
    lambdas = [_check_lambda(v) for v in lambdas]
    alphas = [float(a) for a in alphas]
    steps = sorted(int(k) for k in steps)
    if not (lambdas and alphas and steps):
        raise EmptyGrid("every grid axis needs at least one value")
    folds = list(folds)
    if not folds:
        raise EmptyGrid("no validation folds")
    for f in folds:
        if np.intersect1d(f.val_ids, f.train.labeled_ids).size:
            raise InputError("validation ids overlap the training ids")
    cache = cache if cache is not None else EmbeddingCache(p, x)
    total = sum(f.val_ids.size for f in folds)

    table = []
    best_key = None
    best = None
    for alpha in alphas:
        for k in steps:
            h = cache.get(alpha, k)
            counts = _fold_correct(h, folds, lambdas)
            for lam, correct in zip(lambdas, counts):
                table.append({"lambda": lam, "alpha": alpha, "K": k, "val_acc": correct / total})
                key = (int(correct), -k, lam, -alpha)
                if best_key is None or key > best_key:
                    best_key, best = key, (lam, alpha, k, correct / total)
    lam, alpha, k, acc = best
    return GridResult(lam, alpha, k, acc, table, cache.propagations)
