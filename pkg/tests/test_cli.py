import csv
import json
import os
import re

import numpy as np
import pytest
import yaml

from clinpred.cli import MODEL_FILE, main
from clinpred.cli.config import load_config, parse_config
from clinpred.cli.modelfile import dumps, loads
from clinpred.cli.pipeline import EventLog, HoldoutVault, run_pipeline
from clinpred.cli.report import write_outputs
from clinpred.cli.svg import calibration_svg, nice_ticks
from clinpred.errors import ChecksumMismatch, FirewallViolation, InvalidSpec, IoError, VersionMismatch
from clinpred.models.estimators import EstimatorSpec
from clinpred.models.tuning import TrainControl, predict, train_tuned
from clinpred.resample import ResamplingPlan

SMALL = {
    "seed": 11,
    "data": {"generate": {"n": 900}},
    "endpoint": {"name": "TwelveMonths", "mode": "classification"},
    "balance": {"kind": "up"},
    "control": {"method": "cv", "number": 3},
    "rfe": {"enabled": True, "sizes": [3, 6, 12]},
    "models": ["glm", {"algorithm": "rf", "grid": {"mtry": [3], "n_trees": [20]}}, {"algorithm": "knn", "grid": {"k": [15]}}],
    "cutoff": {"policy": "balanced"},
}


def write_config(folder, doc):
    path = os.path.join(folder, "config.yaml")
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh)
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("run")
    cfg = write_config(str(base), SMALL)
    out = str(base / "out")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    return out


# -- configuration -------------------------------------------------------------------------
def test_config_defaults_and_seed_override():
    cfg = parse_config({"endpoint": {"name": "y"}, "control": {"seed": 5}, "split": {"seed": 6}})
    assert cfg.plan.seed == 5 and cfg.split_seed == 6 and cfg.plan.kind == "boot"
    assert [m.algorithm for m in cfg.models] == ["glm"]
    cfg = parse_config({"endpoint": {"name": "y"}, "control": {"seed": 5}, "split": {"seed": 6}}, seed=9, threads=3)
    assert cfg.plan.seed == 9 and cfg.split_seed == 9 and cfg.threads == 3


def test_grid_mapping_expands_to_product():
    cfg = parse_config({"endpoint": {"name": "y"}, "models": [{"algorithm": "gbm", "grid": {"n_trees": [50, 100], "depth": [1, 2]}}]})
    assert cfg.models[0].grid == ({"n_trees": 50, "depth": 1}, {"n_trees": 50, "depth": 2},
                                  {"n_trees": 100, "depth": 1}, {"n_trees": 100, "depth": 2})


@pytest.mark.parametrize("doc", [
    {},
    {"endpoint": {"name": "y"}, "colour": 1},
    {"endpoint": {"name": "y"}, "control": {"method": "jackknife"}},
    {"endpoint": {"name": "y", "mode": "regression"}, "models": ["nb"]},
    {"endpoint": {"name": "y", "mode": "regression"}, "balance": {"kind": "up"}},
    {"endpoint": {"name": "y"}, "models": [{"algorithm": "rf", "grid": {"depth": [2]}}]},
    {"endpoint": {"name": "y"}, "models": ["glm", "glm"]},
    {"endpoint": {"name": "y"}, "cutoff": {"policy": "rule_in"}},
    {"endpoint": {"name": "y"}, "control": {"metric": "RMSE"}},
    {"endpoint": {"name": "y"}, "rfe": {"enabled": True}},
])
def test_config_errors(doc):
    with pytest.raises(InvalidSpec):
        parse_config(doc)


def test_config_relative_input_and_bad_yaml(tmp_path):
    path = write_config(str(tmp_path), {"endpoint": {"name": "y"}, "data": {"input": "c.csv"}})
    assert load_config(path).data.input == str(tmp_path / "c.csv")
    (tmp_path / "bad.yaml").write_text("endpoint: [unclosed\n")
    with pytest.raises(InvalidSpec):
        load_config(str(tmp_path / "bad.yaml"))


# -- model files ---------------------------------------------------------------------------
@pytest.mark.parametrize("spec", [
    EstimatorSpec("glm"),
    EstimatorSpec("enet", ({"alpha": 0.5, "lambda": 0.01},)),
    EstimatorSpec("nb", ({"usekernel": True, "fL": 1.0},)),
    EstimatorSpec("knn", ({"k": 9},)),
    EstimatorSpec("rf", ({"mtry": 3, "n_trees": 10},)),
    EstimatorSpec("gbm", ({"n_trees": 30, "depth": 2},)),
])
def test_model_file_round_trip_is_bit_exact(split, spec):
    train = split.train.take(np.arange(300))
    model = train_tuned(train, spec, TrainControl(plan=ResamplingPlan("cv", 2, 1))).best.with_cutoff(0.37)
    text = dumps(model)
    back = loads(text)
    assert dumps(back) == text
    assert back.cutoff == 0.37
    assert np.array_equal(predict(model, split.test).values, predict(back, split.test).values)


def test_model_file_checksum_and_version(split):
    model = train_tuned(split.train.take(np.arange(200)), EstimatorSpec("glm"), TrainControl(plan=ResamplingPlan("cv", 2, 1))).best
    text = dumps(model)
    damaged = text.replace('"mode": "classification"', '"mode": "classificatioN"', 1)
    with pytest.raises(ChecksumMismatch):
        loads(damaged)
    import hashlib

    body = text.partition("\n")[2][:-1].replace('"format_version": 1', '"format_version": 7', 1)
    resigned = f"# clinpred-model sha256={hashlib.sha256(body.encode()).hexdigest()}\n{body}\n"
    with pytest.raises(VersionMismatch, match="version 7"):
        loads(resigned)


# -- plots -----------------------------------------------------------------------------------
def test_calibration_svg_has_one_marker_per_group():
    bins = [(i / 10 + 0.05, i / 10 + 0.04) for i in range(10)]
    text = calibration_svg(bins, np.column_stack([np.linspace(0, 1, 5)] * 2))
    assert text.count('class="marker"') == 10
    assert text.count('class="diagonal"') == 1
    assert 'viewBox="0 0 800 600"' in text


def test_nice_ticks():
    assert [lab for _, lab in nice_ticks(0, 1)] == ["0", "0.2", "0.4", "0.6", "0.8", "1"]
    assert [v for v, _ in nice_ticks(0.83, 0.97)][0] >= 0.83


# -- firewall ------------------------------------------------------------------------------
def test_vault_refuses_before_freeze():
    log = EventLog()
    vault = HoldoutVault("test rows", log)
    with pytest.raises(FirewallViolation):
        vault.open()
    vault.freeze(type("M", (), {"algorithm": "glm", "cutoff": 0.5})())
    assert vault.open() == "test rows"
    assert [e for e, _ in log.events] == ["freeze", "test:open"]


def test_test_split_opened_once_after_freeze():
    log = EventLog()
    cfg = parse_config({**SMALL, "data": {"generate": {"n": 600}}, "rfe": {}})
    report, model = run_pipeline(cfg, log)
    events = [e for e, _ in log.events]
    assert events.count("test:open") == 1
    assert log.first("freeze") < log.first("test:open") < log.first("evaluate")
    assert events[:2] == ["load", "split"] and events.count("tune") == 3
    assert report["events"] == events


# -- commands ------------------------------------------------------------------------------
def test_run_outputs(run_dir):
    names = sorted(os.listdir(run_dir))
    assert names == sorted([
        "calibration.svg", "comparison.svg", "importance.svg", "manifest.json", "metrics_test.csv",
        "metrics_train.csv", MODEL_FILE, "report.json", "rfe.svg", "roc.svg",
    ])
    manifest = json.load(open(os.path.join(run_dir, "manifest.json")))
    assert {f["name"] for f in manifest["files"]} == set(names) - {"manifest.json"}


def test_csv_values_match_report_exactly(run_dir):
    report = json.load(open(os.path.join(run_dir, "report.json")))
    rows = list(csv.DictReader(open(os.path.join(run_dir, "metrics_test.csv"))))
    for row in rows:
        v = report["test"][row["metric"]]
        assert (row["value"] == "NA") if v is None else float(row["value"]) == v
    train = list(csv.DictReader(open(os.path.join(run_dir, "metrics_train.csv"))))
    for row, comp in zip(train, report["comparison"]):
        assert float(row["mean"]) == comp["mean"] and row["model"] == comp["algorithm"]
    assert sum(r["selected"] == "1" for r in train) == 1


def test_predict_and_report_commands(run_dir, tmp_path):
    cohort = str(tmp_path / "c.csv")
    assert main(["generate", "--rows", "50", "--seed", "3", "--out", cohort]) == 0
    preds = str(tmp_path / "p.csv")
    assert main(["predict", os.path.join(run_dir, MODEL_FILE), cohort, "--out", preds]) == 0
    rows = list(csv.DictReader(open(preds)))
    assert len(rows) == 50 and set(rows[0]) == {"row", "probability", "label", "extrapolated", "imputed"}
    again = str(tmp_path / "again")
    assert main(["report", run_dir, "--out", again]) == 0
    for name in os.listdir(run_dir):
        assert open(os.path.join(run_dir, name), "rb").read() == open(os.path.join(again, name), "rb").read()


def test_evaluate_only(run_dir, tmp_path):
    cohort = str(tmp_path / "ext.csv")
    assert main(["generate", "--rows", "400", "--seed", "99", "--out", cohort]) == 0
    cfg = write_config(str(tmp_path), {"endpoint": {"name": "TwelveMonths"}, "data": {"input": "ext.csv", "drop": ["Survival"]}})
    out = str(tmp_path / "ev")
    assert main(["run", "--config", cfg, "--out", out, "--evaluate-only", os.path.join(run_dir, MODEL_FILE)]) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["kind"] == "evaluation" and 0.5 < report["test"]["auc"] <= 1


def test_exit_codes(run_dir, tmp_path, capsys):
    cfg = write_config(str(tmp_path), {"data": {"generate": {"n": 100}}})
    assert main(["run", "--config", cfg]) == 2
    assert "endpoint.name" in capsys.readouterr().err
    bad = tmp_path / "damaged.clinpred"
    text = open(os.path.join(run_dir, MODEL_FILE)).read()
    bad.write_text(re.sub(r'"cutoff": [0-9.e-]+', '"cutoff": 0.1', text, count=1))
    cohort = str(tmp_path / "c.csv")
    main(["generate", "--rows", "20", "--out", cohort])
    assert main(["predict", str(bad), cohort]) == 3
    with open(cohort) as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    k = header.index("KPS")
    trimmed = tmp_path / "trim.csv"
    trimmed.write_text("\n".join(",".join(c for j, c in enumerate(l.split(",")) if j != k) for l in lines) + "\n")
    assert main(["predict", os.path.join(run_dir, MODEL_FILE), str(trimmed)]) == 3
    assert "KPS" in capsys.readouterr().err


def test_failed_run_leaves_no_partial_output(tmp_path):
    cfg = write_config(str(tmp_path), {**SMALL, "endpoint": {"name": "NoSuchColumn"}})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 3
    assert not out.exists()
    with pytest.raises(IoError):
        write_outputs(str(tmp_path / "o2"), {"a.csv": "x\n", "sub/b.csv": "y\n"})
    assert not (tmp_path / "o2").exists()
    assert not [n for n in os.listdir(tmp_path) if n.startswith(".clinpred-")]


def test_outputs_identical_across_thread_counts(tmp_path):
    doc = {**SMALL, "data": {"generate": {"n": 600}}, "rfe": {}}
    cfg = write_config(str(tmp_path), doc)
    outs = []
    for t in (1, 3):
        out = str(tmp_path / f"t{t}")
        assert main(["run", "--config", cfg, "--threads", str(t), "--out", out]) == 0
        outs.append(out)
    for name in sorted(os.listdir(outs[0])):
        assert open(os.path.join(outs[0], name), "rb").read() == open(os.path.join(outs[1], name), "rb").read(), name
