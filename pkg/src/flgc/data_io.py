"""Dataset loading, scaling, stratified splits and noise injection."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    ClassTooSmall,
    IndexOutOfRange,
    InputError,
    MissingLabelColumn,
    NonNumericFeature,
    ParseError,
)
from .numerics import as_dense, derive_rng
from .semi_supervised import LabeledSplit

BUNDLED = ("iris", "wine")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None
    class_count: int
    name: str = ""
    class_names: tuple = ()

    def __post_init__(self):
        x = as_dense(self.features, "features")
        object.__setattr__(self, "features", x)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (x.shape[0],):
                raise InputError(f"{y.size} labels for {x.shape[0]} rows")
            if y.size and (y.min() < 0 or y.max() >= self.class_count):
                raise InputError(f"labels must lie in [0, {self.class_count})")
            if np.unique(y).size != self.class_count:
                raise InputError("every class must have at least one member")
            object.__setattr__(self, "labels", y)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def with_features(self, features):
        return Dataset(features, self.labels, self.class_count, self.name, self.class_names)


def _resolve_label_column(header, label_column, width):
    if label_column is None:
        return None
    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.lstrip("-").isdigit()):
        idx = int(label_column)
        if idx < 0:
            idx += width
        if not 0 <= idx < width:
            raise MissingLabelColumn(f"label column index {label_column} out of range for {width} columns")
        return idx
    if header is None:
        raise MissingLabelColumn(f"label column {label_column!r} given by name but the file has no header")
    if label_column not in header:
        raise MissingLabelColumn(f"no column named {label_column!r}; header is {header}")
    return header.index(label_column)


def load_csv(path, label_column=-1, has_header=True, name=None) -> Dataset:
    """Read a numeric feature table with one categorical label column.

    Class ids are assigned in order of first appearance. Pass
    ``label_column=None`` for unlabeled data.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path} is empty")
    header = None
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path} has no data rows")
    width = len(rows[0][1])
    label_idx = _resolve_label_column(header, label_column, width)

    feats, raw_labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", line=lineno)
        vals = []
        for col, cell in enumerate(row):
            if col == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericFeature(f"non-numeric feature {cell!r}", line=lineno, column=col + 1) from None
            if not math.isfinite(v):
                raise NonNumericFeature(f"non-finite feature {cell!r}", line=lineno, column=col + 1)
            vals.append(v)
        feats.append(vals)

    labels = None
    names = ()
    class_count = 0
    if label_idx is not None:
        ids = {}
        labels = np.array([ids.setdefault(v, len(ids)) for v in raw_labels], dtype=np.int64)
        names = tuple(ids)
        class_count = len(ids)
    return Dataset(np.array(feats, dtype=np.float64), labels, class_count, name or path.stem, names)


def load_bundled(name) -> Dataset:
    """One of the small datasets shipped with the package (iris, wine)."""
    if name not in BUNDLED:
        raise InputError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    with resources.as_file(resources.files("flgc.data") / f"{name}.csv") as path:
        return load_csv(path, label_column="class", has_header=True, name=name)


def minmax_scale(features):
    """Scale each column to [0, 1]; constant columns become 0."""
    x = as_dense(features, "features")
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    out = np.zeros_like(x)
    ok = span > 0
    out[:, ok] = (x[:, ok] - lo[ok]) / span[ok]
    return out


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    labeled_fraction: float = 0.1
    per_class_min: int = 1

    def __post_init__(self):
        if not 0 < self.labeled_fraction <= 1:
            raise InputError("labeled_fraction must lie in (0, 1]")
        if self.per_class_min < 1:
            raise InputError("per_class_min must be at least 1")


def per_class_count(n_members, spec: SplitSpec):
    # ceil: 10% gives iris 15, wine 19, zoo 13 labeled nodes
    return max(spec.per_class_min, math.ceil(spec.labeled_fraction * n_members - 1e-9))


def stratified_split(dataset: Dataset, spec: SplitSpec):
    """Sample labeled nodes per class without replacement.

    Returns ``(LabeledSplit, unlabeled_ids)``; both id arrays are sorted.
    """
    y = dataset.labels
    if y is None:
        raise InputError("stratified splitting needs labels")
    rng = derive_rng(spec.seed, 1)
    chosen = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(y == c)
        if members.size < spec.per_class_min:
            raise ClassTooSmall(f"class {c} has {members.size} members, need {spec.per_class_min}")
        take = min(members.size, per_class_count(members.size, spec))
        chosen.append(rng.choice(members, size=take, replace=False))
    labeled = np.sort(np.concatenate(chosen))
    unlabeled = np.setdiff1d(np.arange(y.size), labeled)
    return LabeledSplit(labeled, y[labeled], dataset.class_count), unlabeled


@dataclass(frozen=True)
class SplitFile:
    labeled: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def load_split_file(path, n_nodes=None) -> SplitFile:
    """Read ``{"labeled": [...], "validation": [...], "test": [...]}``."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    parts = {}
    for key in ("labeled", "validation", "test"):
        ids = np.asarray(doc.get(key, []), dtype=np.int64)
        if n_nodes is not None and ids.size and (ids.min() < 0 or ids.max() >= n_nodes):
            raise IndexOutOfRange(f"{path}: {key} ids outside [0, {n_nodes})")
        parts[key] = ids
    if parts["labeled"].size == 0:
        raise InputError(f"{path}: no labeled ids")
    if np.intersect1d(parts["labeled"], parts["validation"]).size:
        raise InputError(f"{path}: labeled and validation ids overlap")
    return SplitFile(**parts)


def add_gaussian_noise(features, sigma2, seed, clip=True):
    """Add N(0, sigma2) noise to every entry, then clip to [0, 1]."""
    if sigma2 < 0:
        raise InputError("noise variance must be non-negative")
    x = as_dense(features, "features")
    if sigma2 == 0:
        return x.copy()
    noise = derive_rng(seed, 2).normal(0.0, math.sqrt(sigma2), size=x.shape)
    noisy = x + noise
    return np.clip(noisy, 0.0, 1.0) if clip else noisy


def add_salt_pepper(features, p, seed):
    """Replace each entry with probability ``p`` by 0 or 1 (equally likely)."""
    if not 0 <= p <= 1:
        raise InputError("corruption probability must lie in [0, 1]")
    x = as_dense(features, "features")
    rng = derive_rng(seed, 3)
    hit = rng.random(x.shape) < p
    salt = rng.random(x.shape) < 0.5
    out = x.copy()
    out[hit] = salt[hit].astype(np.float64)
    return out
