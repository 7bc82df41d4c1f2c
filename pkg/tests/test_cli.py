import json
import subprocess
import sys

import pytest

import small_configs
from qaead.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, main


@pytest.fixture
def cfg_path(tmp_path):
    return small_configs.write(tmp_path / "cfg.json", small_configs.small_qae())


def test_synth(tmp_path, cfg_path):
    out = tmp_path / "s"
    assert main(["synth", "--config", str(cfg_path), "--out", str(out), "--seed", "4"]) == EXIT_OK
    assert (out / "dataset.csv").read_text().startswith("E_T,pT_b1")
    assert json.loads((out / "synth_config.json").read_text())["seed"] == 4
    assert set(json.loads((out / "schema.json").read_text())["columns"]) >= {"theta_l", "dR_l1"}


def test_train_then_evaluate_and_metrics(tmp_path, cfg_path):
    out = tmp_path / "t"
    assert main(["--config", str(cfg_path), "--out", str(out), "train"]) == EXIT_OK
    doc = json.loads((out / "model.json").read_text())
    assert doc["family"] == "qae" and len(doc["model"]["theta"]) == 4
    assert (out / "loss.csv").read_text().splitlines()[0] == "epoch,mean_loss,mean_Q,mean_M2"

    ev = tmp_path / "e"
    assert main(["evaluate", "--config", str(cfg_path), "--model", str(out / "model.json"), "--out", str(ev)]) == 0
    rep = json.loads((ev / "report.json").read_text())
    assert rep["n_folds"] == 2 and 0 <= rep["auc_mean"] <= 1

    me = tmp_path / "m"
    assert main(["metrics", "--config", str(cfg_path), "--model", str(out / "model.json"), "--out", str(me)]) == 0
    summary = json.loads((me / "metrics.json").read_text())["distributions"]
    assert {d["metric"] for d in summary} == {"Q", "M2"}
    assert (me / "q_hist.csv").read_text().splitlines()[0] == "provenance,value"


def test_evaluate_full_experiment(tmp_path, cfg_path):
    out = tmp_path / "full"
    assert main(["evaluate", "--config", str(cfg_path), "--out", str(out), "--threads", "2"]) == EXIT_OK
    assert (out / "timings.json").exists() and (out / "q_hist.csv").exists()


def test_gridsearch(tmp_path):
    doc = small_configs.small_cae(folds={"n_folds": 1}, train={"epochs": 1},
                                  grid={"budget": 2, "space": {"batch_sizes": [25], "neurons": [2, 6]}})
    cfg = small_configs.write(tmp_path / "g.json", doc)
    out = tmp_path / "g"
    assert main(["gridsearch", "--config", str(cfg), "--out", str(out), "--budget", "3"]) == EXIT_OK
    res = json.loads((out / "gridsearch.json").read_text())
    assert res["budget"] == 3 and len(res["results"]) == 3
    assert (out / "gridsearch.csv").read_text().splitlines()[0].startswith("bucket,rank,candidate")


def test_exit_code_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["train", "--config", str(bad)]) == EXIT_CONFIG
    unknown = small_configs.write(tmp_path / "u.json", {"nonsense": 1})
    assert main(["evaluate", "--config", str(unknown)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_exit_code_data(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("a,b,label\n1,2,background\n1,oops,signal\n")
    doc = small_configs.small_qae(dataset={"source": "csv", "path": str(data)})
    cfg = small_configs.write(tmp_path / "c.json", doc)
    assert main(["train", "--config", str(cfg)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "row 3" in err and "'b'" in err


def test_exit_code_runtime(tmp_path, cfg_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["synth", "--config", str(cfg_path), "--out", str(blocker / "x")]) == EXIT_RUNTIME


def test_module_entry_point(tmp_path, cfg_path):
    proc = subprocess.run([sys.executable, "-m", "qaead", "synth", "--config", str(cfg_path), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and "dataset.csv" in proc.stdout
