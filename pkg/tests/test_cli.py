import io
import json
import os

import pytest

from adaptrust.cli import run
from adaptrust.core import UsagePattern
from adaptrust.evalharness import EvalConfig, evaluate_pipeline
from adaptrust.indicators import detect_indicator_count
from adaptrust.multiuse import multi_use_trust, usage_significance
from adaptrust.nnet import TrainConfig
from adaptrust.synth.storage import DatasetPaths, load_dataset, load_model_pair


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    code, _, err = call("generate", "--out", str(d), "--indicators", "2", "--num-services", "40",
                        "--num-sessions", "12", "--seed", "5")
    assert code == 0, err
    return d


def data_flags(d):
    return ["--ratings", str(d / "ratings.csv"), "--services", str(d / "services.json"), "--usages", str(d / "usages.json")]


@pytest.fixture(scope="module")
def model_dir(data_dir, tmp_path_factory):
    m = tmp_path_factory.mktemp("model")
    code, out, err = call("train", *data_flags(data_dir), "--model-dir", str(m), "--epochs", "150")
    assert code == 0, err
    return m


def test_generate_files_and_reproducible(data_dir, tmp_path):
    assert sorted(os.listdir(data_dir)) == ["ground_truth.json", "ratings.csv", "services.json", "sessions.json", "usages.json"]
    again = tmp_path / "again"
    assert call("generate", "--out", str(again), "--indicators", "2", "--num-services", "40",
                "--num-sessions", "12", "--seed", "5")[0] == 0
    for name in os.listdir(data_dir):
        assert (again / name).read_bytes() == (data_dir / name).read_bytes()


def test_detect_indicators(data_dir, tmp_path):
    out_file = tmp_path / "partition.json"
    code, out, _ = call("detect-indicators", *data_flags(data_dir), "--epsilon", "0.15", "--out", str(out_file))
    assert code == 0
    count, partition = detect_indicator_count(load_dataset(DatasetPaths.in_dir(data_dir)), 0.15)
    assert out.splitlines()[0] == f"indicators: {count}"
    saved = json.loads(out_file.read_text())
    assert saved["indicator_count"] == count == 2
    assert saved["partition"] == [sorted(b.members) for b in partition.blocks]


def test_assess_pattern_matches_library(data_dir, model_dir):
    code, out, err = call("assess", "--model-dir", str(model_dir), "--service-id", "S01", "--pattern", "U1,U2,U3",
                          "--aggregation", "weighted", "--durations", "30,10,5")
    assert code == 0, err
    ds = load_dataset(DatasetPaths.in_dir(data_dir))
    pair = load_model_pair(model_dir)
    pattern = UsagePattern(("U1", "U2", "U3"), tuple(usage_significance([30, 10, 5])))
    score = multi_use_trust(pair, ds.service("S01"), pattern, "weighted", {u.id: u for u in ds.usages})
    assert out.splitlines() == [f"trust: {score.value:.6f}", f"level: {score.level}"]


def test_assess_single_usage(model_dir):
    code, out, _ = call("assess", "--model-dir", str(model_dir), "--service-id", "S02", "--usage-id", "U4")
    assert code == 0 and out.startswith("trust: ")


@pytest.mark.parametrize("argv, flag", [
    (["assess", "--service-id", "S01", "--usage-id", "U1"], "--model-dir"),
    (["assess", "--service-id", "S99", "--usage-id", "U1"], "--service-id"),
    (["assess", "--service-id", "S01", "--pattern", "U1,U77"], "--pattern"),
    (["assess", "--service-id", "S01", "--pattern", "U1,U2", "--durations", "3"], "--durations"),
    (["assess", "--service-id", "S01", "--pattern", "U1,U2", "--durations", "0,0"], "--durations"),
    (["assess", "--service-id", "S01", "--pattern", "U1,U2", "--aggregation", "median"], "--aggregation"),
])
def test_assess_usage_errors(model_dir, argv, flag):
    if "--model-dir" != flag:
        argv = argv + ["--model-dir", str(model_dir)]
    code, _, err = call(*argv)
    assert code == 1 and flag in err


def test_missing_ratings_flag(data_dir):
    code, _, err = call("detect-indicators", "--services", str(data_dir / "services.json"), "--usages", str(data_dir / "usages.json"))
    assert code == 1 and "--ratings" in err


@pytest.mark.parametrize("flag, value", [("--epsilon", "0"), ("--split", "1.5"), ("--epochs", "0"),
                                         ("--hidden", "-2"), ("--learning-rate", "-1"), ("--seed", "x")])
def test_numeric_flag_ranges(data_dir, flag, value):
    code, _, err = call("evaluate", *data_flags(data_dir), flag, value)
    assert code == 1 and flag in err


def test_missing_file_is_io_error(data_dir, tmp_path):
    code, _, err = call("detect-indicators", "--ratings", str(data_dir / "ratings.csv"),
                        "--services", str(tmp_path / "nope.json"), "--usages", str(data_dir / "usages.json"))
    assert code == 2 and "nope.json" in err


def test_malformed_ratings_is_validation_error(data_dir, tmp_path):
    bad = tmp_path / "ratings.csv"
    bad.write_text("service_id,usage_id,rating\nS01,U1,eleven\n")
    code, _, err = call("detect-indicators", "--ratings", str(bad), "--services", str(data_dir / "services.json"),
                        "--usages", str(data_dir / "usages.json"))
    assert code == 1 and "row 2" in err


def test_evaluate_matches_library(data_dir, tmp_path):
    report_file = tmp_path / "report.json"
    code, out, _ = call("evaluate", *data_flags(data_dir), "--epochs", "100", "--seed", "3", "--out", str(report_file))
    assert code == 0 and "macro" in out
    ds = load_dataset(DatasetPaths.in_dir(data_dir))
    lib = evaluate_pipeline(ds, EvalConfig(seed=3, train=TrainConfig(epochs=100, seed=3)))
    saved = json.loads(report_file.read_text())
    assert saved["macro_accuracy"] == lib.macro_accuracy and saved["confusion"] == [list(r) for r in lib.confusion]


def test_evaluate_sessions(data_dir):
    code, out, _ = call("evaluate", *data_flags(data_dir), "--epochs", "50", "--sessions", str(data_dir / "sessions.json"),
                        "--aggregation", "closeness")
    assert code == 0 and "exact-level accuracy" in out


def test_writes_only_flagged_paths(data_dir, tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    m = tmp_path / "m"
    assert call("train", *data_flags(data_dir), "--model-dir", str(m), "--epochs", "5")[0] == 0
    assert call("assess", "--model-dir", str(m), "--service-id", "S01", "--usage-id", "U1")[0] == 0
    assert call("evaluate", *data_flags(data_dir), "--epochs", "5")[0] == 0
    assert os.listdir(work) == []
    assert sorted(os.listdir(tmp_path)) == ["cwd", "m"]


def test_help_exits_zero():
    code, _, _ = call("--help")
    assert code == 0
