import os

import numpy as np
import pytest
from click.testing import CliRunner

from mlgdsc.cli import main
from mlgdsc.datamodel import read_labels, write_matrix_csv


def _run(args, env=None):
    result = CliRunner().invoke(main, [str(a) for a in args], env=env)
    return result


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    r = _run(["gen", "--k", 3, "--d", 3, "--dim", 30, "--per-cluster", 20, "--layers", 3, "--noise", 0.05, "--seed", 7, "--out", out])
    assert r.exit_code == 0, r.output
    return out


def _layers(d, ext="csv"):
    return [d / f"layer{v}.{ext}" for v in range(3)]


def test_gen_files_and_determinism(tmp_path):
    args = ["gen", "--k", 2, "--d", 2, "--dim", 8, "--per-cluster", 5, "--layers", 2, "--seed", 1]
    assert _run(args + ["--out", tmp_path / "a"]).exit_code == 0
    assert _run(args + ["--out", tmp_path / "b"]).exit_code == 0
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["labels.txt", "layer0.csv", "layer1.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_gen_binary(tmp_path):
    assert _run(["gen", "--per-cluster", 5, "--format", "binary", "--out", tmp_path]).exit_code == 0
    assert (tmp_path / "layer2.mlgm").read_bytes()[:4] == b"MLGM"


def test_gen_requires_out():
    r = _run(["gen", "--k", 3])
    assert r.exit_code == 2


def test_gen_config_file(tmp_path):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("k = 2\nper_cluster = 4\nlayers = 1\n")
    assert _run(["gen", "--config", cfg, "--out", tmp_path / "o"]).exit_code == 0
    assert read_labels(tmp_path / "o" / "labels.txt").size == 8
    cfg.write_text("bogus = 1\n")
    assert _run(["gen", "--config", cfg, "--out", tmp_path / "o"]).exit_code == 2


def test_cluster_and_oos(data, tmp_path):
    r = _run(["cluster", *_layers(data), "--k", 3, "--d", 3, "--truth", data / "labels.txt", "--out", tmp_path / "run"])
    assert r.exit_code == 0, r.output
    assert r.output.startswith("ACC ")
    summary = (tmp_path / "run" / "summary.txt").read_text()
    assert "metric.acc" in summary and "time." not in summary
    assert (tmp_path / "run" / "oos_model" / "model.txt").exists()
    r = _run(["oos", tmp_path / "run", data / "layer2.csv", "--out", tmp_path / "pred.txt", "--distances", tmp_path / "d.csv"])
    assert r.exit_code == 0, r.output
    assert read_labels(tmp_path / "pred.txt").size == 60
    assert (tmp_path / "d.csv").read_text().startswith("cluster0,cluster1,cluster2\n")


def test_cluster_timings_flag(data, tmp_path):
    r = _run(["cluster", data / "layer0.csv", "--k", 3, "--d", 3, "--timings", "--out", tmp_path])
    assert r.exit_code == 0
    assert "time.kmeans" in (tmp_path / "summary.txt").read_text()


def test_cluster_mismatched_layers(data, tmp_path):
    write_matrix_csv(np.ones((30, 10)), tmp_path / "short.csv")
    r = _run(["cluster", data / "layer0.csv", tmp_path / "short.csv", "--k", 3, "--d", 3, "--out", tmp_path / "o"])
    assert r.exit_code == 2
    assert "layer 1" in r.output


def test_cluster_bad_config(data, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("k = 3\nd 3\n")
    r = _run(["cluster", data / "layer0.csv", "--config", cfg, "--out", tmp_path / "o"])
    assert r.exit_code == 2


def test_cluster_preset(data, tmp_path):
    r = _run(["cluster", data / "layer0.csv", "--preset", "coil20", "--k", 3, "--d", 3, "--out", tmp_path])
    assert r.exit_code == 0, r.output
    help_text = _run(["cluster", "--help"]).output
    assert "MNIST d=12" in help_text


def test_oos_dimension_mismatch(data, tmp_path):
    assert _run(["cluster", data / "layer0.csv", "--k", 3, "--d", 3, "--out", tmp_path / "run"]).exit_code == 0
    write_matrix_csv(np.ones((5, 4)), tmp_path / "bad.csv")
    r = _run(["oos", tmp_path / "run", tmp_path / "bad.csv", "--out", tmp_path / "p.txt"])
    assert r.exit_code == 2


def test_metrics_identical(data):
    r = _run(["metrics", data / "labels.txt", data / "labels.txt"])
    assert r.exit_code == 0
    assert r.output.strip() == "ACC 1.0000 NMI 1.0000 F1 1.0000"


def test_metrics_length_mismatch(data, tmp_path):
    (tmp_path / "p.txt").write_text("0\n1\n")
    assert _run(["metrics", data / "labels.txt", tmp_path / "p.txt"]).exit_code == 2


def test_bench_identical_variants(data, tmp_path):
    r = _run(["bench", *_layers(data), "--k", 3, "--d", 3, "--truth", data / "labels.txt", "--trials", 3,
              "--subset-size", 30, "--variant", "A=all", "--variant", "B=all", "--out", tmp_path])
    assert r.exit_code == 0, r.output
    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert rows[-1].startswith("p A vs. B,1,1,1")
    assert (tmp_path / "trials.csv").read_text().startswith("trial,method,metric,value\n")


def test_bench_infeasible(data, tmp_path):
    r = _run(["bench", *_layers(data), "--k", 3, "--d", 3, "--truth", data / "labels.txt", "--subset-size", 100, "--out", tmp_path])
    assert r.exit_code == 2
