import json
import logging
import os

import pytest

from clusterselect.dataset import synth_blobs, write_csv
from clusterselect.labeling import Labeling, read_labeling
from clusterselect.main import main
from clusterselect.search import read_ensemble

SPEC_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "experiments")

GRID = {
    "grid": [
        {"algorithm": "kmeans", "params": {"k": [2, 3]}},
        {"algorithm": "dbscan", "params": {"eps": [0.5, 1.0], "m_points": 3}},
        {"algorithm": "agglomerative", "params": {"k": 2, "linkage": ["single", "complete"]}},
    ]
}


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def blobs_csv(tmp_path):
    ds, truth = synth_blobs([[0.0, 0.0], [10.0, 10.0]], 10, sd=0.2, seed=5)
    path = tmp_path / "data.csv"
    write_csv(ds, str(path))
    return str(path), truth


@pytest.fixture
def grid_json(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(GRID))
    return str(path)


def test_cluster_dbscan(tmp_path, blobs_csv, capsys):
    data, truth = blobs_csv
    out = tmp_path / "labels.txt"
    code = main(["cluster", "--data", data, "--algo", "dbscan", "--eps", "1.0", "--min-pts", "3", "--out", str(out)])
    assert code == 0
    assert read_labeling(out) == truth
    assert "dbscan(eps=1, m_points=3): 2 clusters, 0 noise points" in capsys.readouterr().out


def test_cluster_invalid_k_is_usage_error(tmp_path, blobs_csv, capsys):
    data, _ = blobs_csv
    code = main(["cluster", "--data", data, "--algo", "kmeans", "--k", "0", "--out", str(tmp_path / "l.txt")])
    assert code == 2
    assert "k must be" in capsys.readouterr().err


def test_missing_data_file_is_io_error(tmp_path, capsys):
    code = main(["cluster", "--data", str(tmp_path / "nope.csv"), "--algo", "kmeans", "--k", "2",
                 "--out", str(tmp_path / "l.txt")])
    assert code == 1
    assert "error: cannot read" in capsys.readouterr().err


def test_unknown_flag_exits_with_usage():
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--bogus"])
    assert exc.value.code == 2


def test_select_best_match_needs_k_star(tmp_path, blobs_csv, grid_json):
    data, _ = blobs_csv
    code = main(["select", "--data", data, "--grid", grid_json, "--out-dir", str(tmp_path / "out")])
    assert code == 2


def test_select_both_strategies(tmp_path, blobs_csv, grid_json, capsys):
    data, _ = blobs_csv
    out = tmp_path / "out"
    code = main(["--threads", "2", "select", "--data", data, "--grid", grid_json, "--strategy", "both",
                 "--k-star", "2", "--out-dir", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "anmi_max:" in printed and "best_match:" in printed
    assert sorted(os.listdir(out)) == [
        "metric_maxima.csv", "metrics.csv", "metrics.txt", "selection_anmi.json", "selection_best_match.json",
    ]
    best = json.loads((out / "selection_best_match.json").read_text())
    assert best["score"] == pytest.approx(1.0)
    assert best["k_star"] == 2


def test_select_anmi_only_writes_scores(tmp_path, blobs_csv, grid_json):
    data, _ = blobs_csv
    out = tmp_path / "out"
    assert main(["select", "--data", data, "--grid", grid_json, "--strategy", "anmi", "--out-dir", str(out)]) == 0
    assert sorted(os.listdir(out)) == ["anmi_scores.csv", "selection_anmi.json"]
    assert (out / "anmi_scores.csv").read_text().splitlines()[0] == "config,anmi"


def test_select_anmi_single_member_is_rejected(tmp_path, blobs_csv, capsys):
    data, _ = blobs_csv
    grid = tmp_path / "one.json"
    grid.write_text(json.dumps([{"algorithm": "kmeans", "params": {"k": 2}}]))
    code = main(["select", "--data", data, "--grid", str(grid), "--strategy", "anmi", "--out-dir", str(tmp_path / "o")])
    assert code == 2
    assert "at least two" in capsys.readouterr().err


def test_duplicate_grid_names_the_config(tmp_path, blobs_csv, capsys):
    data, _ = blobs_csv
    grid = tmp_path / "dup.yaml"
    grid.write_text("- algorithm: kmeans\n  params: {k: [3, 3]}\n")
    code = main(["ensemble", "--data", data, "--grid", str(grid), "--out", str(tmp_path / "e.csv")])
    assert code == 2
    assert "kmeans(k=3)" in capsys.readouterr().err


def test_ensemble_then_consensus(tmp_path, blobs_csv, grid_json, capsys):
    data, truth = blobs_csv
    ens_path = tmp_path / "ens.csv"
    assert main(["ensemble", "--data", data, "--grid", grid_json, "--out", str(ens_path)]) == 0
    names, labelings = read_ensemble(ens_path)
    assert len(names) == 6
    assert "6 members (0 dropped)" in capsys.readouterr().out

    c_path, m_path = tmp_path / "c.txt", tmp_path / "h.csv"
    code = main(["consensus", "--ensemble", str(ens_path), "--k-star", "2", "--out", str(c_path),
                 "--matrix-out", str(m_path)])
    assert code == 0
    assert read_labeling(c_path) == truth
    assert len(m_path.read_text().splitlines()) == truth.n

    direct = tmp_path / "direct.txt"
    code = main(["consensus", "--data", data, "--grid", grid_json, "--k-star", "2", "--out", str(direct)])
    assert code == 0
    assert read_labeling(direct) == read_labeling(c_path)


def test_consensus_without_source(tmp_path):
    assert main(["consensus", "--k-star", "2", "--out", str(tmp_path / "c.txt")]) == 2


def test_metrics_with_reference(tmp_path, blobs_csv, capsys):
    data, truth = blobs_csv
    labels, ref = tmp_path / "l.txt", tmp_path / "r.txt"
    labels.write_text("\n".join(str(v) for v in truth.tolist()) + "\n")
    ref.write_text("\n".join(str(1 - v) for v in truth.tolist()) + "\n")
    out = tmp_path / "m.json"
    code = main(["metrics", "--data", data, "--labels", str(labels), "--reference", str(ref), "--out", str(out)])
    assert code == 0
    values = json.loads(out.read_text())
    assert values["nmi"] == pytest.approx(1.0)
    assert values["ari"] == pytest.approx(1.0)
    assert values["silhouette"] > 0.9
    assert "chi" in capsys.readouterr().out


def test_metrics_single_cluster_prints_undefined(tmp_path, blobs_csv, capsys):
    data, truth = blobs_csv
    labels = tmp_path / "l.txt"
    labels.write_text("0\n" * truth.n)
    assert main(["metrics", "--data", data, "--labels", str(labels)]) == 0
    rows = dict(line.split() for line in capsys.readouterr().out.splitlines()[2:])
    assert rows == {"chi": "--", "di1": "--", "di2": "--", "silhouette": "--"}


def test_metrics_length_mismatch(tmp_path, blobs_csv):
    data, _ = blobs_csv
    labels = tmp_path / "l.txt"
    labels.write_text("0\n1\n")
    assert main(["metrics", "--data", data, "--labels", str(labels)]) == 2


def test_experiment_with_overrides(tmp_path, capsys):
    out = tmp_path / "bundle"
    code = main(["experiment", os.path.join(SPEC_DIR, "blobs_quick.json"), "--out-dir", str(out), "--k-star", "4"])
    assert code == 0
    assert (out / "consensus_k4.csv").exists()
    assert "best_match:" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["k_star"] == 4


def test_bench_small(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--n", "12,24", "--m", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,m,strategy1_seconds,strategy2_seconds,nmi_evaluations,hamming_pairs"
    assert [line.split(",")[-1] for line in lines[1:]] == ["66", "276"]
    assert "hamming_pairs" in capsys.readouterr().out


def test_bench_rejects_tiny_sizes():
    assert main(["bench", "--n", "3", "--m", "3"]) == 2
