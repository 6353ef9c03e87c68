"""Dense linear-algebra kernels shared by the solvers.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The routines
here validate their inputs (finite entries, matching shapes) and translate
LAPACK failures into the package's own exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import (
    ConvergenceFailure,
    DegenerateInput,
    InputError,
    NotPositiveDefinite,
    ShapeMismatch,
)

SYMMETRY_RTOL = 1e-10


def as_dense(values, name="matrix", ndim=2):
    """Return ``values`` as a finite float64 array with ``ndim`` dimensions."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains NaN or Inf entries")
    return arr


def derive_rng(seed, *counters):
    """Counter-based child generator: the same ``(seed, counters)`` always
    yields the same stream, independent of call order."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(c) for c in counters))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *counters):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(c) for c in counters))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _check_symmetric(a):
    scale = np.max(np.abs(a)) if a.size else 0.0
    asym = np.max(np.abs(a - np.swapaxes(a, -1, -2))) if a.size else 0.0
    if asym > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise InputError(f"matrix is not symmetric (max asymmetry {asym:.3e})")


def spd_solve(matrix, rhs, check_symmetry=True):
    """Solve ``matrix @ S = rhs`` for a symmetric positive definite ``matrix``.

    Uses a Cholesky factorization; there is no pivoted or least-squares
    fallback. A stack of systems (leading batch dimensions on both arguments)
    is solved in one call.

    Parameters
    ----------
    matrix : array_like, shape (..., n, n)
    rhs : array_like, shape (..., n) or (..., n, m)

    Returns
    -------
    ndarray with the shape of ``rhs``

    Raises
    ------
    NotPositiveDefinite
        If the factorization meets a non-positive pivot.
    """
    a = np.asarray(matrix, dtype=np.float64)
    b = np.asarray(rhs, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeMismatch(f"matrix must be square, got shape {a.shape}")
    vector_rhs = b.ndim == a.ndim - 1
    if vector_rhs:
        b = b[..., None]
    if b.shape[-2] != a.shape[-1] or b.shape[:-2] != a.shape[:-2]:
        raise ShapeMismatch(f"rhs shape {np.shape(rhs)} incompatible with matrix {a.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputError("system contains NaN or Inf entries")
    if check_symmetry:
        _check_symmetric(a)

    if a.ndim == 2:
        try:
            factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc
        out = scipy.linalg.cho_solve(factor, b, check_finite=False)
    else:
        try:
            low = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc
        y = np.linalg.solve(low, b)
        out = np.linalg.solve(np.swapaxes(low, -1, -2), y)
    return out[..., 0] if vector_rhs else out


def sym_eig_smallest(matrix, count):
    """Algebraically smallest ``count`` eigenpairs of a symmetric matrix.

    The full spectrum is computed (LAPACK ``syevd``) and the leading part
    returned, eigenvalues ascending, eigenvectors as unit-norm columns.
    """
    a = as_dense(matrix)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ShapeMismatch(f"matrix must be square, got shape {a.shape}")
    if not 1 <= count <= n:
        raise InputError(f"count must lie in [1, {n}], got {count}")
    _check_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return values[:count], vectors[:, :count]


# --------------------------------------------------------------------------
# k-means

@dataclass
class KMeansRun:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    trace: list = field(default_factory=list)


def _sq_dists(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # every point coincides with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = points[idx]
        closest = np.minimum(closest, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def _repair_empty(points, labels, centers, k):
    # Move the point farthest from its own center into each empty cluster.
    for c in range(k):
        if np.any(labels == c):
            continue
        own = ((points - centers[labels]) ** 2).sum(axis=1)
        counts = np.bincount(labels, minlength=k)
        own[counts[labels] <= 1] = -1.0
        far = int(np.argmax(own))
        labels[far] = c
        centers[c] = points[far]
    return labels


def lloyd(points, k, rng, max_iter=300):
    """One k-means run: k-means++ seeding, then Lloyd iterations until the
    assignment stops changing or ``max_iter`` is reached."""
    centers = _kmeans_pp(points, k, rng)
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    trace = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels = _repair_empty(points, labels, centers, k)
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
        trace.append(float(((points - centers[labels]) ** 2).sum()))
        new = np.argmin(_sq_dists(points, centers), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    inertia = float(((points - centers[labels]) ** 2).sum())
    return KMeansRun(labels=labels, centers=centers, inertia=inertia, n_iter=n_iter, trace=trace)


def kmeans(points, k, restarts=20, seed=0, max_iter=300):
    """Cluster the rows of ``points`` into ``k`` groups.

    Each restart ``r`` draws from ``derive_rng(seed, r)``, so the result is a
    pure function of the arguments. The labeling with the lowest
    within-cluster sum of squares wins; ties go to the earliest restart.
    """
    pts = as_dense(points, "points")
    n = pts.shape[0]
    if k < 1 or restarts < 1:
        raise InputError("k and restarts must be positive")
    if k > n:
        raise DegenerateInput(f"k={k} exceeds the number of points ({n})")
    if k > 1 and np.unique(pts, axis=0).shape[0] < k:
        raise DegenerateInput(f"fewer than k={k} distinct points")
    best = None
    for r in range(restarts):
        run = lloyd(pts, k, derive_rng(seed, r), max_iter=max_iter)
        if best is None or run.inertia < best.inertia:
            best = run
    return best.labels.astype(np.int64)


def hungarian_min_cost(cost):
    """Minimum-cost perfect assignment for a square cost matrix.

    Returns ``assignment`` with ``assignment[i]`` the column matched to row i.
    """
    c = as_dense(cost, "cost")
    if c.shape[0] != c.shape[1]:
        raise ShapeMismatch(f"cost matrix must be square, got {c.shape}")
    rows, cols = linear_sum_assignment(c)
    out = np.empty(c.shape[0], dtype=np.int64)
    out[rows] = cols
    return out
