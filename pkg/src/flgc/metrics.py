"""Classification accuracy, clustering accuracy and NMI."""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, LengthMismatch
from .numerics import hungarian_min_cost


def _pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.size != truth.size:
        raise LengthMismatch(f"{pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise EmptyInput("cannot score empty label vectors")
    return pred, truth


def accuracy(pred, truth):
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred == truth))


def contingency_table(truth, pred):
    """Counts with rows indexed by true class and columns by predicted cluster
    (both re-indexed densely in sorted order)."""
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def clustering_accuracy(pred, truth):
    """Fraction correct under the best one-to-one cluster-to-class mapping."""
    pred, truth = _pair(pred, truth)
    table = contingency_table(truth, pred)
    n = max(table.shape)
    square = np.zeros((n, n), dtype=np.int64)
    square[: table.shape[0], : table.shape[1]] = table
    # maximize matches == minimize (max - count)
    assign = hungarian_min_cost(square.max() - square)
    return float(square[np.arange(n), assign].sum() / pred.size)


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth):
    """Mutual information normalized by the arithmetic mean of the entropies."""
    pred, truth = _pair(pred, truth)
    table = contingency_table(truth, pred).astype(np.float64)
    n = float(pred.size)
    h_true = _entropy(table.sum(axis=1), n)
    h_pred = _entropy(table.sum(axis=0), n)
    if h_true == 0.0 and h_pred == 0.0:
        # both partitions are a single block, hence identical
        return 1.0
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    value = mi / (0.5 * (h_true + h_pred))
    return float(min(1.0, max(0.0, value)))
