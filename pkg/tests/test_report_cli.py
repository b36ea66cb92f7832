import json
import subprocess
import sys

import numpy as np
import pytest

from mvclust import PipelineConfig, generate_synthetic, save_dataset
from mvclust.pipeline import run_pipeline
from mvclust.report import METRIC_COLUMNS, build_report, format_table, write_outputs, write_report


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "mvclust.cli", *argv],
        capture_output=True,
        text=True,
        timeout=300,
    )


@pytest.fixture(scope="module")
def small_run():
    ds = generate_synthetic(per_cluster=15, clusters=3, views=2, seed=5)
    cfg = PipelineConfig(clusters=3, k=6, seed=0)
    return ds, run_pipeline(ds, cfg)


# ---------------------------------------------------------------- report


def test_report_json_round_trip(tmp_path, small_run):
    ds, result = small_run
    report = write_outputs(result, ds, tmp_path)
    parsed = json.loads((tmp_path / "report.json").read_text())
    assert parsed == report.to_dict()
    assert list(parsed["metrics"]) == sorted(METRIC_COLUMNS)  # json sorts keys
    labels = np.loadtxt(tmp_path / "labels.txt", dtype=int)
    assert np.array_equal(labels, result.labels)


def test_report_table_rounds_to_four_decimals(small_run):
    ds, result = small_run
    report = build_report(result, ds)
    table = format_table(report)
    for name in METRIC_COLUMNS:
        assert name in table
    value_line = [l for l in table.splitlines() if l.startswith("ACC")][0]
    assert value_line.split()[-1] == "%.4f" % report.metrics["ACC"]


def test_report_without_labels(tmp_path):
    ds = generate_synthetic(per_cluster=10, clusters=3, views=2, seed=6)
    ds.labels = None
    result = run_pipeline(ds, PipelineConfig(clusters=3, k=5, seed=0))
    report = build_report(result, ds, labels_path="labels.txt")
    assert report.metrics is None
    table = format_table(report)
    assert "ACC" not in table
    assert "labels: labels.txt" in table
    write_report(report, tmp_path)
    parsed = json.loads((tmp_path / "report.json").read_text())
    assert parsed["metrics"] is None


# ---------------------------------------------------------------- cli


def test_cli_run_writes_report(tmp_path):
    ds = generate_synthetic(per_cluster=12, clusters=3, views=2, seed=7)
    manifest = save_dataset(ds, tmp_path / "data")
    out = tmp_path / "out"
    proc = run_cli("run", "--data", str(manifest), "--clusters", "3", "--k", "5",
                   "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((out / "report.json").read_text())
    assert report["clusters"] == 3
    assert report["config"]["k"] == 5
    assert (out / "labels.txt").exists()


def test_cli_missing_clusters_is_usage_error(tmp_path):
    ds = generate_synthetic(per_cluster=10, clusters=2, views=1, seed=8)
    manifest = save_dataset(ds, tmp_path / "data")
    proc = run_cli("run", "--data", str(manifest), "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: input:")


def test_cli_missing_manifest_is_usage_error(tmp_path):
    proc = run_cli("run", "--data", str(tmp_path / "nope.toml"), "--clusters", "3",
                   "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "manifest not found" in proc.stderr


def test_cli_unknown_flag_exits_two():
    proc = run_cli("run", "--frobnicate")
    assert proc.returncode == 2


def test_cli_config_data_mismatch_exits_two(tmp_path):
    ds = generate_synthetic(per_cluster=5, clusters=2, views=1, seed=11)
    manifest = save_dataset(ds, tmp_path / "data")
    proc = run_cli("run", "--data", str(manifest), "--clusters", "2", "--k", "99",
                   "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "out of range" in proc.stderr


def test_cli_config_file_with_flag_override(tmp_path):
    ds = generate_synthetic(per_cluster=12, clusters=3, views=2, seed=9)
    manifest = save_dataset(ds, tmp_path / "data")
    cfg_file = tmp_path / "cfg.toml"
    cfg_file.write_text('clusters = 3\nk = 5\nrho = 0.01\nseed = 4\n')
    out = tmp_path / "out"
    proc = run_cli("run", "--data", str(manifest), "--config", str(cfg_file),
                   "--seed", "11", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["k"] == 5          # from file
    assert report["config"]["rho"] == 0.01     # from file
    assert report["config"]["seed"] == 11      # flag wins


def test_cli_config_file_rejects_unknown_keys(tmp_path):
    cfg_file = tmp_path / "cfg.toml"
    cfg_file.write_text('clusters = 3\nwibble = 1\n')
    proc = run_cli("synth", "--config", str(cfg_file), "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "wibble" in proc.stderr


def test_cli_determinism_modulo_timing(tmp_path):
    ds = generate_synthetic(per_cluster=12, clusters=3, views=2, seed=10)
    manifest = save_dataset(ds, tmp_path / "data")
    reports = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        proc = run_cli("run", "--data", str(manifest), "--clusters", "3", "--k", "5",
                       "--seed", "2", "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        rep = json.loads((out / "report.json").read_text())
        rep.pop("timings")
        reports.append(rep)
        labels = (out / "labels.txt").read_text()
        reports.append(labels)
    assert reports[0] == reports[2]
    assert reports[1] == reports[3]


def test_cli_synth_and_save_data(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("synth", "--per-cluster", "10", "--views", "2", "--k", "5",
                   "--save-data", str(tmp_path / "data"), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "data" / "dataset.toml").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["n_samples"] == 30


def test_cli_bench_schema(tmp_path):
    out = tmp_path / "bench"
    proc = run_cli("bench", "--per-cluster", "10", "--views", "2", "--k", "5",
                   "--norms", "t-gamma,weighted-tnn,tnn", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    lines = (out / "bench.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header == ["norm", "gamma", "rho"] + METRIC_COLUMNS + ["seconds"]
    assert len(lines) == 4  # one row per norm mode
    assert all(len(l.split(",")) == len(header) for l in lines[1:])
    rows = json.loads((out / "bench.json").read_text())
    assert [r["norm"] for r in rows] == ["t-gamma", "weighted-tnn", "tnn"]


def test_cli_prox_check_passes():
    proc = run_cli("prox-check", "--trials", "40")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 2
