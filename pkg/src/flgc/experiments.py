"""Benchmark harness: repeated classification, clustering, sweeps and
noise-robustness tables.

Every runner takes a :class:`RunConfig` and returns a list of plain-dict
records. Each record carries the hyperparameters that produced it, so a
single line is enough to replay a result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import presets
from .clustering import (
    DEFAULT_RESTARTS,
    build_affinity,
    cluster_embedding,
    fit_coefficients,
    spectral_segment,
)
from .data_io import (
    Dataset,
    SplitSpec,
    add_gaussian_noise,
    add_salt_pepper,
    load_bundled,
    load_csv,
    load_split_file,
    minmax_scale,
    stratified_split,
)
from .errors import ConfigError
from .graph import SparseAdjacency, default_k, knn_graph, load_edge_list, renormalize
from .metrics import accuracy, clustering_accuracy, nmi
from .numerics import derive_seed
from .propagation import EmbeddingCache
from .semi_supervised import (
    LabeledSplit,
    ValidationFold,
    build_targets,
    fit,
    grid_search,
    predict,
    validation_folds,
)

TASKS = ("classify", "cluster", "sweep", "robustness")
NOISES = ("gaussian", "saltpepper")


@dataclass
class RunConfig:
    task: str
    dataset: str | None = None
    features: str | None = None
    label_column: str | int | None = -1
    has_header: bool = True
    edge_list: str | None = None
    knn: int | str | None = None
    scale: str = "minmax"
    lam: float | None = None
    alpha: float | None = None
    steps: int | None = None
    grid_lambda: tuple = ()
    grid_alpha: tuple = ()
    grid_steps: tuple = ()
    seed: int = 0
    repeats: int = 1
    split_file: str | None = None
    labeled_fraction: float = 0.1
    val_fraction: float = 0.2
    clusters: int | None = None
    restarts: int = DEFAULT_RESTARTS
    noise: tuple = NOISES
    intensities: tuple = presets.NOISE_INTENSITIES
    sweep_target: str = "classify"
    out_dir: str | None = None
    dump_affinity: bool = False

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"--task must be one of {TASKS}, got {self.task!r}")
        if (self.dataset is None) == (self.features is None):
            raise ConfigError("give exactly one of --dataset or --features")
        if self.edge_list is not None and self.knn is not None:
            raise ConfigError("give exactly one graph source: --edge-list or --knn")
        if self.scale not in ("minmax", "none"):
            raise ConfigError("--scale must be 'minmax' or 'none'")
        if self.repeats < 1:
            raise ConfigError("--repeats must be at least 1")
        if self.task == "sweep" and not (self.grid_alpha and self.grid_steps):
            raise ConfigError("the sweep task needs non-empty --grid-alpha and --grid-steps")
        if self.sweep_target not in ("classify", "cluster"):
            raise ConfigError("--sweep-target must be 'classify' or 'cluster'")
        for n in self.noise:
            if n not in NOISES:
                raise ConfigError(f"--noise must be drawn from {NOISES}, got {n!r}")
        searching = bool(self.grid_lambda or self.grid_alpha or self.grid_steps)
        if self.task in ("classify", "cluster") and not searching:
            missing = [n for n in ("lam", "alpha", "steps") if getattr(self, n) is None]
            if missing:
                raise ConfigError(
                    "give --lambda, --alpha and --steps or search grids; missing "
                    + ", ".join("--" + ("lambda" if m == "lam" else m) for m in missing)
                )
        if self.task == "sweep" and self.lam is None:
            raise ConfigError("the sweep task needs a fixed --lambda")
        if self.task == "robustness" and None in (self.lam, self.alpha, self.steps):
            raise ConfigError("the robustness task needs --lambda, --alpha and --steps")
        return self


# --------------------------------------------------------------------------
# shared plumbing


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is not None:
        ds = load_bundled(cfg.dataset)
    else:
        ds = load_csv(cfg.features, label_column=cfg.label_column, has_header=cfg.has_header)
    if cfg.scale == "minmax":
        ds = ds.with_features(minmax_scale(ds.features))
    return ds


def n_classes(cfg: RunConfig, ds: Dataset):
    if cfg.clusters is not None:
        return int(cfg.clusters)
    if ds.labels is None:
        raise ConfigError("unlabeled data needs --clusters")
    return ds.class_count


def resolve_k(cfg: RunConfig, ds: Dataset):
    if cfg.knn is None or cfg.knn == "auto":
        return default_k(ds.n_samples, n_classes(cfg, ds))
    return int(cfg.knn)


def build_propagation(cfg: RunConfig, ds: Dataset, features=None):
    """Propagation matrix and the neighborhood size used (None for edge lists)."""
    x = ds.features if features is None else features
    if cfg.edge_list is not None:
        return renormalize(load_edge_list(cfg.edge_list, x.shape[0])), None
    k = resolve_k(cfg, ds)
    if k == 0:
        # no edges: P = I
        return renormalize(SparseAdjacency.from_edges(x.shape[0], [])), 0
    return renormalize(knn_graph(x, k)), k


def _grid(cfg: RunConfig, lams, alphas, steps):
    return (
        tuple(cfg.grid_lambda) or ((cfg.lam,) if cfg.lam is not None else tuple(lams)),
        tuple(cfg.grid_alpha) or ((cfg.alpha,) if cfg.alpha is not None else tuple(alphas)),
        tuple(cfg.grid_steps) or ((cfg.steps,) if cfg.steps is not None else tuple(steps)),
    )


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


# --------------------------------------------------------------------------
# classification


@dataclass
class _Repeat:
    split_seed: int | None
    split: LabeledSplit
    test_ids: np.ndarray
    folds: list = field(default_factory=list)


def _classification_repeats(cfg: RunConfig, ds: Dataset):
    if ds.labels is None:
        raise ConfigError("classification needs a label column")
    if cfg.split_file is not None:
        sf = load_split_file(cfg.split_file, ds.n_samples)
        split = LabeledSplit.from_truth(sf.labeled, ds.labels, ds.class_count)
        test = sf.test if sf.test.size else np.setdiff1d(
            np.arange(ds.n_samples), np.concatenate([sf.labeled, sf.validation]))
        folds = []
        if sf.validation.size:
            folds = [ValidationFold(split, sf.validation, ds.labels[sf.validation])]
        else:
            folds = validation_folds(split, cfg.val_fraction, seed=cfg.seed)
        return [_Repeat(None, split, test, folds)]
    out = []
    for r in range(cfg.repeats):
        s = derive_seed(cfg.seed, r)
        split, unlabeled = stratified_split(ds, SplitSpec(seed=s, labeled_fraction=cfg.labeled_fraction))
        out.append(_Repeat(s, split, unlabeled, validation_folds(split, cfg.val_fraction, seed=s)))
    return out


def _classify_once(h, rep: _Repeat, truth, lam):
    w = fit(h, build_targets(rep.split, h.shape[0]), rep.split, lam)
    pred = predict(h, w)
    return accuracy(pred[rep.test_ids], truth[rep.test_ids])


def run_classify(cfg: RunConfig):
    """Repeated transductive classification.

    With search grids, one ``(lambda, alpha, K)`` cell is chosen for all
    repeats by validation accuracy pooled over every repeat's validation
    folds (held-out labeled nodes only), then each repeat is refit on its
    full labeled set and scored on its unlabeled nodes.
    """
    cfg.validate()
    ds = load_dataset(cfg)
    p, k = build_propagation(cfg, ds)
    reps = _classification_repeats(cfg, ds)
    cache = EmbeddingCache(p, ds.features)
    lams, alphas, steps = _grid(cfg, presets.CLASSIFY_LAMBDAS, presets.CLASSIFY_ALPHAS, presets.CLASSIFY_STEPS)
    folds = [f for rep in reps for f in rep.folds]
    gs = grid_search(p, ds.features, folds, lams, alphas, steps, cache=cache)

    base = {"task": "classify", "dataset": ds.name, "lambda": gs.lam, "alpha": gs.alpha,
            "K": gs.steps, "k": k, "seed": cfg.seed, "scale": cfg.scale}
    h = cache.get(gs.alpha, gs.steps)
    records = []
    accs = []
    for r, rep in enumerate(reps):
        acc = _classify_once(h, rep, ds.labels, gs.lam)
        accs.append(acc)
        records.append({**base, "record": "run", "repeat": r, "split_seed": rep.split_seed,
                        "n_labeled": len(rep.split), "val_acc": gs.val_acc, "test_acc": acc})
    mean, std = _mean_std(accs)
    records.append({**base, "record": "summary", "repeats": len(reps), "val_acc": gs.val_acc,
                    "test_acc_mean": mean, "test_acc_std": std})
    return records


def run_ridge_baseline(cfg: RunConfig):
    """The same protocol with the graph ignored (plain ridge classifier on X)."""
    cfg.validate()
    ds = load_dataset(cfg)
    reps = _classification_repeats(cfg, ds)
    records = []
    for r, rep in enumerate(reps):
        acc = _classify_once(ds.features, rep, ds.labels, cfg.lam)
        records.append({"record": "run", "repeat": r, "split_seed": rep.split_seed,
                        "lambda": cfg.lam, "test_acc": acc})
    return records


# --------------------------------------------------------------------------
# clustering


def _score_clusters(labels, truth):
    if truth is None:
        return {}
    return {"acc": clustering_accuracy(labels, truth), "nmi": nmi(labels, truth)}


def tune_clustering(cache: EmbeddingCache, truth, n_clusters, lams, alphas, steps, seed=0,
                    restarts=DEFAULT_RESTARTS):
    """Pick the cell with the best clustering ACC against ``truth``.

    This is the usual benchmark protocol for clustering and uses the
    reference labels; ties prefer higher NMI, then fewer steps,
    larger lambda and smaller alpha. Returns ``(best, table)``.
    """
    table = []
    best_key, best = None, None
    for alpha in alphas:
        for k in sorted(steps):
            h = cache.get(alpha, k)
            for lam in lams:
                labels = cluster_embedding(h, cache.x, lam, n_clusters, seed=seed, restarts=restarts).labels
                scores = _score_clusters(labels, truth)
                row = {"lambda": float(lam), "alpha": float(alpha), "K": int(k), **scores}
                table.append(row)
                key = (round(scores["acc"], 12), round(scores["nmi"], 12), -k, lam, -alpha)
                if best_key is None or key > best_key:
                    best_key, best = key, row
    return best, table


def run_cluster(cfg: RunConfig, keep_labels=False):
    cfg.validate()
    ds = load_dataset(cfg)
    c = n_classes(cfg, ds)
    p, k = build_propagation(cfg, ds)
    cache = EmbeddingCache(p, ds.features)
    searching = bool(cfg.grid_lambda or cfg.grid_alpha or cfg.grid_steps)
    records = []
    if searching:
        if ds.labels is None:
            raise ConfigError("tuning a clustering grid needs reference labels")
        lams, alphas, steps = _grid(cfg, presets.CLUSTER_LAMBDAS, presets.CLUSTER_ALPHAS, presets.CLUSTER_STEPS)
        best, table = tune_clustering(cache, ds.labels, c, lams, alphas, steps, seed=cfg.seed,
                                      restarts=cfg.restarts)
        for row in table:
            records.append({"task": "cluster", "record": "grid", "dataset": ds.name, "k": k,
                            "seed": cfg.seed, "scale": cfg.scale, **row})
        lam, alpha, n_steps = best["lambda"], best["alpha"], best["K"]
    else:
        lam, alpha, n_steps = cfg.lam, cfg.alpha, cfg.steps

    h = cache.get(alpha, n_steps)
    z = fit_coefficients(h, ds.features, lam)
    affinity = build_affinity(z)
    base = {"task": "cluster", "dataset": ds.name, "lambda": float(lam), "alpha": float(alpha),
            "K": int(n_steps), "k": k, "scale": cfg.scale}
    runs = []
    labels_out = None
    for r in range(cfg.repeats):
        s = cfg.seed if r == 0 else derive_seed(cfg.seed, r)
        labels = spectral_segment(affinity, c, seed=s, restarts=cfg.restarts).labels
        if r == 0:
            labels_out = labels
        scores = _score_clusters(labels, ds.labels)
        runs.append(scores)
        records.append({**base, "record": "run", "repeat": r, "seed": s, **scores})
    if ds.labels is not None:
        acc_m, acc_s = _mean_std([x["acc"] for x in runs])
        nmi_m, nmi_s = _mean_std([x["nmi"] for x in runs])
        records.append({**base, "record": "summary", "seed": cfg.seed, "repeats": cfg.repeats,
                        "acc_mean": acc_m, "acc_std": acc_s, "nmi_mean": nmi_m, "nmi_std": nmi_s})
    if keep_labels:
        return records, labels_out, affinity
    return records


# --------------------------------------------------------------------------
# sweeps


def run_sweep(cfg: RunConfig):
    """Metric and wall-clock time per ``(alpha, K)`` cell at a fixed lambda.

    Time covers propagation (accumulated incrementally over K, as the cache
    builds step K from step K-1) plus the solve; I/O is excluded.
    """
    cfg.validate()
    ds = load_dataset(cfg)
    p, k = build_propagation(cfg, ds)
    x = ds.features
    lam = float(cfg.lam)
    rows = []
    if cfg.sweep_target == "classify":
        reps = _classification_repeats(cfg, ds)
    c = n_classes(cfg, ds)
    for alpha in cfg.grid_alpha:
        alpha = float(alpha)
        h = x
        done = 0
        prop_time = 0.0
        for n_steps in sorted(int(s) for s in cfg.grid_steps):
            t0 = time.perf_counter()
            while done < n_steps:
                h = (1.0 - alpha) * (p.matrix @ h) + alpha * x
                done += 1
            prop_time += time.perf_counter() - t0
            t1 = time.perf_counter()
            if cfg.sweep_target == "classify":
                vals = [_classify_once(h, rep, ds.labels, lam) for rep in reps]
                metric = "test_acc"
            else:
                lab = cluster_embedding(h, x, lam, c, seed=cfg.seed, restarts=cfg.restarts).labels
                vals = [clustering_accuracy(lab, ds.labels)]
                metric = "acc"
            solve_time = (time.perf_counter() - t1) / len(vals)
            mean, std = _mean_std(vals)
            rows.append({"task": "sweep", "record": "cell", "dataset": ds.name, "scheme": f"alpha={alpha:g}",
                         "alpha": alpha, "K": n_steps, "lambda": lam, "k": k, "seed": cfg.seed,
                         "metric": metric, "value": mean, "std": std, "repeats": len(vals),
                         "time_s": prop_time + solve_time})
    return rows


# --------------------------------------------------------------------------
# robustness


def corrupt(features, noise, intensity, seed):
    if noise == "gaussian":
        return add_gaussian_noise(features, intensity, seed)
    if noise == "saltpepper":
        return add_salt_pepper(features, intensity, seed)
    raise ConfigError(f"unknown noise type {noise!r}")


def run_robustness(cfg: RunConfig):
    """Clustering quality under Gaussian and salt-and-pepper corruption.

    Features are min-max scaled before corruption (the noise models assume
    values in [0, 1]); the kNN graph is rebuilt from the corrupted data.
    """
    cfg = replace(cfg, scale="minmax")
    cfg.validate()
    ds = load_dataset(cfg)
    c = n_classes(cfg, ds)
    records = []
    for ni, noise in enumerate(cfg.noise):
        for ii, intensity in enumerate(cfg.intensities):
            accs, nmis = [], []
            for r in range(cfg.repeats):
                s = derive_seed(cfg.seed, ni, ii, r)
                x = corrupt(ds.features, noise, float(intensity), s)
                noisy = ds.with_features(x)
                p, k = build_propagation(cfg, noisy)
                cache = EmbeddingCache(p, x)
                h = cache.get(cfg.alpha, cfg.steps)
                labels = cluster_embedding(h, x, cfg.lam, c, seed=cfg.seed, restarts=cfg.restarts).labels
                sc = _score_clusters(labels, ds.labels)
                accs.append(sc.get("acc", float("nan")))
                nmis.append(sc.get("nmi", float("nan")))
            acc_m, acc_s = _mean_std(accs)
            nmi_m, nmi_s = _mean_std(nmis)
            records.append({"task": "robustness", "record": "cell", "dataset": ds.name, "noise": noise,
                            "intensity": float(intensity), "lambda": float(cfg.lam),
                            "alpha": float(cfg.alpha), "K": int(cfg.steps), "k": k, "seed": cfg.seed,
                            "repeats": cfg.repeats, "acc": acc_m, "acc_std": acc_s,
                            "nmi": nmi_m, "nmi_std": nmi_s, "n_clusters": len(np.unique(labels))})
    return records


RUNNERS = {
    "classify": run_classify,
    "cluster": run_cluster,
    "sweep": run_sweep,
    "robustness": run_robustness,
}
