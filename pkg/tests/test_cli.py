import csv
import json

import numpy as np
import pytest

from flgc import cli
from flgc.experiments import RunConfig, run_classify, run_ridge_baseline, run_robustness


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def blob_csv(tmp_path, seed=0, per_blob=30, spread=0.05):
    """Three tight blobs on orthogonal directions, written with a label column."""
    rng = np.random.default_rng(seed)
    centers = np.array([[1.0, 0.1, 0.1, 0.1], [0.1, 1.0, 0.1, 0.1], [0.1, 0.1, 1.0, 0.1]])
    x = np.vstack([c + rng.normal(scale=spread, size=(per_blob, 4)) for c in centers])
    y = np.repeat(["a", "b", "c"], per_blob)
    path = tmp_path / "blobs.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f0", "f1", "f2", "f3", "label"])
        for row, lab in zip(x, y):
            w.writerow([f"{v:.6f}" for v in row] + [lab])
    return path


# ------------------------------------------------------------------ exit codes


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    assert "--task" in capsys.readouterr().out


def test_missing_hyperparameters_is_config_error(capsys):
    assert cli.main(["--task", "classify", "--dataset", "iris"]) == cli.EXIT_CONFIG
    assert "--lambda" in capsys.readouterr().err


def test_two_graph_sources_rejected(tmp_path):
    edges = tmp_path / "e.txt"
    edges.write_text("0 1\n")
    code = cli.main(["--task", "cluster", "--dataset", "iris", "--edge-list", str(edges), "--knn", "3",
                     "--lambda", "1", "--alpha", "0", "--steps", "1"])
    assert code == cli.EXIT_CONFIG


def test_missing_file_is_config_error(tmp_path):
    code = cli.main(["--task", "cluster", "--features", str(tmp_path / "nope.csv"),
                     "--lambda", "1", "--alpha", "0", "--steps", "1"])
    assert code == cli.EXIT_CONFIG


def test_bad_csv_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,y\n1,x,p\n2,3,q\n")
    code = cli.main(["--task", "cluster", "--features", str(path), "--lambda", "1", "--alpha", "0",
                     "--steps", "1"])
    assert code == cli.EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_sweep_needs_grids():
    code = cli.main(["--task", "sweep", "--dataset", "iris", "--lambda", "1"])
    assert code == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(monkeypatch):
    from flgc import experiments
    from flgc.errors import NotPositiveDefinite

    def boom(cfg, keep_labels=False):
        raise NotPositiveDefinite("pivot <= 0")

    monkeypatch.setattr(experiments, "run_cluster", boom)
    code = cli.main(["--task", "cluster", "--dataset", "iris", "--lambda", "1", "--alpha", "0", "--steps", "1"])
    assert code == cli.EXIT_NUMERIC


def test_argument_parsers():
    assert cli.parse_log_grid("2^-1:2^1:3") == pytest.approx((0.5, 1.0, 2.0))
    assert cli.parse_int_list("0:3,7") == (0, 1, 2, 3, 7)
    assert cli.parse_float_list("0,0.5, 1") == (0.0, 0.5, 1.0)
    assert cli.parse_knn("auto") == "auto" and cli.parse_knn("4") == 4
    import argparse

    for bad in ("1:2", "0:1:3", "a:b:c"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_log_grid(bad)
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_knn("-1")


def config(argv):
    return cli.config_from_args(cli.build_parser().parse_args(argv))


def test_default_repeats_follow_the_split_protocol():
    grids = ["--lambda", "1e-4", "--grid-alpha", "0.1", "--grid-steps", "2:4"]
    assert config(["--task", "sweep", "--dataset", "iris", *grids]).repeats == 30
    assert config(["--task", "sweep", "--dataset", "iris", "--sweep-target", "cluster", *grids]).repeats == 1
    assert config(["--task", "classify", "--dataset", "iris", "--preset"]).repeats == 30


def test_preset_fills_tuned_cell_for_cluster_and_robustness():
    for task in ("cluster", "robustness"):
        cfg = config(["--task", task, "--dataset", "iris", "--preset"])
        assert (cfg.lam, cfg.alpha, cfg.steps, cfg.scale) == (30.0, 0.0, 7, "none")
    cfg = config(["--task", "cluster", "--dataset", "wine", "--preset", "--steps", "5"])
    assert (cfg.lam, cfg.alpha, cfg.steps, cfg.scale) == (3.0, 0.3, 5, "minmax")
    assert cli.main(["--task", "robustness", "--features", "x.csv", "--preset"]) == 2


# --------------------------------------------------------------------- outputs


def test_classify_outputs_and_provenance(tmp_path):
    out = tmp_path / "run"
    code = cli.main(["--task", "classify", "--dataset", "iris", "--lambda", "0.01", "--alpha", "0.1",
                     "--steps", "3", "--repeats", "4", "--out-dir", str(out)])
    assert code == 0
    records = read_jsonl(out / "records.jsonl")
    runs = [r for r in records if r["record"] == "run"]
    assert len(runs) == 4
    for r in runs:
        for key in ("lambda", "alpha", "K", "k", "seed", "split_seed", "test_acc"):
            assert key in r
        assert r["k"] == 10
    summary = records[-1]
    assert summary["record"] == "summary"
    assert summary["test_acc_mean"] == pytest.approx(np.mean([r["test_acc"] for r in runs]))
    rows = read_csv(out / "results.csv")
    assert len(rows) == 4 and rows[0]["dataset"] == "iris"


def test_classify_with_split_file_runs_once(tmp_path):
    split = tmp_path / "split.json"
    split.write_text(json.dumps({"labeled": [0, 1, 50, 51, 100, 101], "validation": [2, 52, 102],
                                 "test": list(range(3, 50))}))
    out = tmp_path / "o"
    code = cli.main(["--task", "classify", "--dataset", "iris", "--split-file", str(split),
                     "--grid-lambda", "2^-4:2^0:3", "--grid-alpha", "0,0.1", "--grid-steps", "1:3",
                     "--out-dir", str(out)])
    assert code == 0
    runs = [r for r in read_jsonl(out / "records.jsonl") if r["record"] == "run"]
    assert len(runs) == 1


def test_cluster_outputs(tmp_path):
    out = tmp_path / "c"
    code = cli.main(["--task", "cluster", "--dataset", "wine", "--lambda", "3", "--alpha", "0.3",
                     "--steps", "2", "--dump-affinity", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "assignments.csv")
    assert len(rows) == 178 and set(rows[0]) == {"node_id", "cluster_id"}
    assert {int(r["cluster_id"]) for r in rows} == {0, 1, 2}
    aff = np.loadtxt(out / "affinity.csv", delimiter=",")
    assert aff.shape == (178, 178)
    np.testing.assert_allclose(aff, aff.T, atol=1e-9)


def test_cluster_unlabeled_features_need_cluster_count(tmp_path):
    path = tmp_path / "u.csv"
    rng = np.random.default_rng(0)
    np.savetxt(path, rng.uniform(size=(20, 3)), delimiter=",")
    base = ["--task", "cluster", "--features", str(path), "--no-header", "--no-labels",
            "--lambda", "1", "--alpha", "0.1", "--steps", "2"]
    assert cli.main(base) == cli.EXIT_CONFIG
    out = tmp_path / "o"
    assert cli.main(base + ["--clusters", "2", "--out-dir", str(out)]) == 0
    assert len(read_csv(out / "assignments.csv")) == 20


def test_edge_list_graph_source(tmp_path):
    feats = blob_csv(tmp_path, per_blob=5)
    edges = tmp_path / "e.txt"
    edges.write_text("\n".join(f"{i} {i + 1}" for i in range(14)) + "\n")
    out = tmp_path / "o"
    code = cli.main(["--task", "cluster", "--features", str(feats), "--edge-list", str(edges),
                     "--lambda", "1", "--alpha", "0.1", "--steps", "2", "--out-dir", str(out)])
    assert code == 0
    rec = read_jsonl(out / "records.jsonl")[0]
    assert rec["k"] is None


@pytest.mark.parametrize("argv", [
    ["--task", "classify", "--dataset", "iris", "--preset", "--grid-steps", "0:4",
     "--grid-alpha", "0,0.1", "--repeats", "5"],
    ["--task", "cluster", "--dataset", "iris", "--preset", "--repeats", "2"],
    ["--task", "sweep", "--dataset", "iris", "--lambda", "1e-4", "--grid-alpha", "0,0.1",
     "--grid-steps", "1:4", "--repeats", "3"],
    ["--task", "robustness", "--dataset", "iris", "--lambda", "30", "--alpha", "0", "--steps", "3",
     "--intensity", "0.05"],
])
def test_records_byte_identical_across_reruns(tmp_path, argv):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(argv + ["--out-dir", str(out)]) == 0
        outs.append((out / "records.jsonl").read_bytes())
    assert outs[0] == outs[1]


# ------------------------------------------------------------------- sweeps


def test_sweep_two_series_of_fifteen(tmp_path):
    out = tmp_path / "s"
    code = cli.main(["--task", "sweep", "--dataset", "iris", "--lambda", "1e-4", "--grid-alpha", "0,0.1",
                     "--grid-steps", "1:15", "--repeats", "2", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 30
    for scheme in ("alpha=0", "alpha=0.1"):
        series = [r for r in rows if r["scheme"] == scheme]
        assert [int(r["K"]) for r in series] == list(range(1, 16))
        times = [float(r["time_s"]) for r in series]
        # propagation time accumulates with K; allow scheduler jitter
        assert times[-1] >= times[0] - 0.05
    assert "time_s" not in read_jsonl(out / "records.jsonl")[0]


def test_sweep_cluster_target(tmp_path):
    out = tmp_path / "s"
    code = cli.main(["--task", "sweep", "--sweep-target", "cluster", "--dataset", "wine", "--lambda", "3",
                     "--grid-alpha", "0.3", "--grid-steps", "1,2", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert [r["metric"] for r in rows] == ["acc", "acc"]


# ---------------------------------------------------------------- robustness


def test_robustness_all_cells(tmp_path):
    feats = blob_csv(tmp_path)
    out = tmp_path / "r"
    code = cli.main(["--task", "robustness", "--features", str(feats), "--lambda", "1", "--alpha", "0.1",
                     "--steps", "2", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "robustness.csv")
    assert [(r["noise"], float(r["intensity"])) for r in rows] == [
        (n, i) for n in ("gaussian", "saltpepper") for i in (0.01, 0.05, 0.1, 0.2)
    ]
    for r in rows:
        assert 0.0 <= float(r["acc"]) <= 1.0 and 0.0 <= float(r["nmi"]) <= 1.0


def test_robustness_zero_intensity_equals_clean_run(tmp_path):
    feats = blob_csv(tmp_path)
    common = dict(features=str(feats), lam=1.0, alpha=0.1, steps=2, knn="auto", seed=3)
    noisy = run_robustness(RunConfig(task="robustness", intensities=(0.0,), **common))
    clean_out = tmp_path / "clean"
    assert cli.main(["--task", "cluster", "--features", str(feats), "--lambda", "1", "--alpha", "0.1",
                     "--steps", "2", "--seed", "3", "--out-dir", str(clean_out)]) == 0
    clean = read_jsonl(clean_out / "records.jsonl")[-1]
    for row in noisy:
        assert row["acc"] == clean["acc_mean"]
        assert row["nmi"] == clean["nmi_mean"]


def test_gaussian_noise_degrades_blob_clustering(tmp_path):
    feats = blob_csv(tmp_path)
    cfg = RunConfig(task="robustness", features=str(feats), lam=1.0, alpha=0.1, steps=2, knn="auto",
                    noise=("gaussian",), intensities=(0.01, 0.2), repeats=5)
    low, high = run_robustness(cfg)
    # blobs 0.05 apart in spread, ~0.9 apart in center: sigma^2 = 0.01 keeps them separable,
    # sigma^2 = 0.2 (std 0.45) swamps the margin
    assert low["acc"] >= 0.95
    assert high["acc"] < low["acc"] - 0.1


# ------------------------------------------------------------ degeneration


def test_alpha_one_equals_ridge_on_raw_features():
    common = dict(dataset="iris", lam=0.05, repeats=5, seed=2)
    graph = run_classify(RunConfig(task="classify", alpha=1.0, steps=6, knn="auto", **common))
    ridge = run_ridge_baseline(RunConfig(task="classify", alpha=1.0, steps=0, **common))
    a = [r["test_acc"] for r in graph if r["record"] == "run"]
    b = [r["test_acc"] for r in ridge]
    assert a == b
