import csv
import hashlib
import json

import numpy as np
import pytest

from regime_forecast import cli
from regime_forecast.config import RunConfig, dumps_config, from_mapping, load_config
from regime_forecast.errors import NumericError

SMALL = """\
synth_length = 1500
states = [3]
components = [1]
families = ["geometric"]
em_max_iters = 20
max_epochs = 2
window = 6
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_print_config_round_trips(tmp_path, capsys):
    assert run("--print-config") == 0
    text = capsys.readouterr().out
    path = tmp_path / "c.toml"
    path.write_text(text)
    assert load_config(path) == RunConfig()
    assert "states = [3, 5]" in text and "window = 12" in text


def test_print_config_applies_overrides(small, capsys):
    assert run("fit-hmm", "--config", small, "--seed", 7, "--print-config") == 0
    text = capsys.readouterr().out
    assert "seed = 7" in text and "synth_length = 1500" in text


@pytest.mark.parametrize("doc, message", [
    ({"bogus": 1}, "unknown"),
    ({"window": "twelve"}, "integer"),
    ({"states": []}, "non-empty"),
    ({"families": ["poisson"]}, "families"),
])
def test_config_validation(doc, message):
    with pytest.raises(ValueError, match=message):
        from_mapping(doc)


def test_usage_errors_exit_1(small, tmp_path, capsys):
    assert run() == 1
    assert run("fly") == 1
    assert run("train", "--config", small, "--out", tmp_path) == 1
    assert run("train", "--config", small, "--out", tmp_path, "--arch", "s-hybrid") == 1
    assert run("decode", "--config", small, "--out", tmp_path) == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("unknown_key = 3\n")
    assert run("synth", "--config", bad) == 1
    capsys.readouterr()


def test_data_errors_exit_2(small, tmp_path, capsys):
    cfg = tmp_path / "missing.toml"
    cfg.write_text(SMALL + f'data = "{tmp_path / "nope.csv"}"\n')
    assert run("fit-hmm", "--config", cfg, "--out", tmp_path / "o") == 2
    broken = tmp_path / "broken.csv"
    broken.write_text("time,value\n2024-01-01T00:00:00,1\n")
    cfg.write_text(SMALL + f'data = "{broken}"\n')
    assert run("fit-hmm", "--config", cfg, "--out", tmp_path / "o") == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{}")
    assert run("decode", "--config", small, "--out", tmp_path / "o", "--model", junk) == 2
    assert "data error" in capsys.readouterr().err


def test_numeric_failure_exit_3(small, tmp_path, monkeypatch, capsys):
    def boom(*_):
        raise NumericError("likelihood became NaN")
    monkeypatch.setattr(cli, "baum_welch_fit", boom)
    assert run("fit-hmm", "--config", small, "--out", tmp_path) == 3
    summary = json.loads((tmp_path / "fit_hmm.json").read_text())
    assert summary["cells"][0]["status"] == "failed"
    capsys.readouterr()


def test_fit_hmm_single_cell(small, tmp_path, capsys):
    assert run("fit-hmm", "--config", small, "--out", tmp_path) == 0
    assert sorted(p.name for p in tmp_path.glob("hmm_*.json")) == ["hmm_geometric_m3_k1.json"]
    rows = read_csv(tmp_path / "selection.csv")
    assert len(rows) == 2 and rows[1][0] == "1"
    capsys.readouterr()


def test_fit_hmm_default_grid_attempts_every_cell(tmp_path, capsys):
    cfg = tmp_path / "grid.toml"
    cfg.write_text("synth_length = 300\nem_max_iters = 2\nem_restarts = 1\nmax_duration = 20\n")
    assert run("fit-hmm", "--config", cfg, "--out", tmp_path / "o") == 0
    cells = json.loads((tmp_path / "o" / "fit_hmm.json").read_text())["cells"]
    assert len(cells) == 16
    ok = [c for c in cells if c["status"] == "ok"]
    assert len(read_csv(tmp_path / "o" / "selection.csv")) == len(ok) + 1
    assert len(list((tmp_path / "o").glob("hmm_*.json"))) == len(ok)
    capsys.readouterr()


def test_decode_path(small, tmp_path, capsys):
    assert run("fit-hmm", "--config", small, "--out", tmp_path) == 0
    assert run("decode", "--config", small, "--out", tmp_path, "--model", tmp_path / "hmm_geometric_m3_k1.json") == 0
    rows = read_csv(tmp_path / "states_hmm_geometric_m3_k1.csv")
    assert rows[0] == ["timestamp", "state"]
    assert len(rows) - 1 == 1500
    assert {int(r[1]) for r in rows[1:]} <= {0, 1, 2}
    capsys.readouterr()


def test_decode_single_state_model_is_constant(small, tmp_path, capsys):
    one = tmp_path / "one.toml"
    one.write_text(SMALL.replace("states = [3]", "states = [1]"))
    assert run("fit-hmm", "--config", one, "--out", tmp_path) == 0
    assert run("decode", "--config", one, "--out", tmp_path, "--model", tmp_path / "hmm_geometric_m1_k1.json") == 0
    assert {r[1] for r in read_csv(tmp_path / "states_hmm_geometric_m1_k1.csv")[1:]} == {"0"}
    capsys.readouterr()


def test_train_and_evaluate(small, tmp_path, capsys):
    out = tmp_path
    assert run("fit-hmm", "--config", small, "--out", out) == 0
    hmm = out / "hmm_geometric_m3_k1.json"
    assert run("train", "--config", small, "--out", out, "--arch", "baseline") == 0
    assert run("train", "--config", small, "--out", out, "--arch", "s-hybrid", "--model", hmm) == 0
    assert run("train", "--config", small, "--out", out, "--arch", "ar-hmm", "--lags", 3) == 0
    history = read_csv(out / "baseline_history.csv")
    assert history[0] == ["epoch", "train_mse", "val_mse"] and len(history) - 1 == 2

    assert run("evaluate", "--config", small, "--out", out, "--model", out / "baseline.json") == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["model"] for r in report["models"]] == ["baseline"]

    models = [out / "baseline.json", out / "s-hybrid.json", out / "ar-hmm-L3.json"]
    assert run("evaluate", "--config", small, "--out", out, *sum((["--model", m] for m in models), [])) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["models"]) == 3
    rmse = [r["rmse"] for r in report["models"]]
    assert rmse == sorted(rmse)
    assert report["test_points"] == 1500 - int(0.6 * 1500) - int(0.15 * 1500) - 6
    feats = read_csv(out / "features_s-hybrid.csv")
    assert feats[0] == ["f1", "f2", "f3", "f4", "f5", "f6", "regime"]
    assert not (out / "features_ar-hmm-L3.csv").exists()
    trace = read_csv(out / "trace.csv")
    assert trace[0] == ["timestamp", "truth", "baseline", "s-hybrid", "ar-hmm-L3"]

    assert run("predict", "--config", small, "--out", out, "--model", out / "s-hybrid.json") == 0
    preds = read_csv(out / "predictions_s-hybrid.csv")
    assert preds[0] == ["timestamp", "y_true", "y_pred", "y_true_flow", "y_pred_flow"]
    assert len(preds) - 1 == report["test_points"]
    capsys.readouterr()


def test_evaluate_rejects_incompatible_checkpoints(small, tmp_path, capsys):
    assert run("train", "--config", small, "--out", tmp_path / "a", "--arch", "baseline") == 0
    other = tmp_path / "w8.toml"
    other.write_text(SMALL.replace("window = 6", "window = 8"))
    assert run("train", "--config", other, "--out", tmp_path / "b", "--arch", "baseline") == 0
    (tmp_path / "b" / "baseline.json").rename(tmp_path / "b" / "baseline8.json")
    assert run("evaluate", "--config", small, "--out", tmp_path / "c", "--model", tmp_path / "a" / "baseline.json",
               "--model", tmp_path / "b" / "baseline8.json") == 2
    # a checkpoint trained on a different series
    assert run("evaluate", "--config", small, "--seed", 5, "--out", tmp_path / "c",
               "--model", tmp_path / "a" / "baseline.json") == 2
    capsys.readouterr()


def test_synth_outputs(small, tmp_path):
    assert run("synth", "--config", small, "--out", tmp_path) == 0
    flows = read_csv(tmp_path / "synth.csv")
    labels = read_csv(tmp_path / "synth_labels.csv")
    assert flows[0] == ["timestamp", "flow"] and len(flows) - 1 == 1501
    assert len(labels) - 1 == 1500
    assert labels[1][0] == flows[2][0]


def test_synth_single_state(tmp_path):
    cfg = tmp_path / "one.toml"
    cfg.write_text("synth_length = 200\nsynth_means = [0.0]\nsynth_variances = [1.0]\nsynth_ar = []\n")
    assert run("synth", "--config", cfg, "--out", tmp_path) == 0
    assert {r[1] for r in read_csv(tmp_path / "synth_labels.csv")[1:]} == {"0"}


def test_synth_seed_changes_output(small, tmp_path):
    assert run("synth", "--config", small, "--out", tmp_path / "a") == 0
    assert run("synth", "--config", small, "--seed", 1, "--out", tmp_path / "b") == 0
    assert digest(tmp_path / "a") != digest(tmp_path / "b")


def pipeline(config, out):
    hmm = out / "hmm_geometric_m3_k1.json"
    steps = [
        ("synth",),
        ("fit-hmm",),
        ("decode", "--model", hmm),
        ("train", "--arch", "baseline"),
        ("train", "--arch", "c-hybrid", "--model", hmm),
        ("train", "--arch", "ar-hmm", "--lags", 2),
        ("evaluate", "--model", out / "baseline.json", "--model", out / "c-hybrid.json",
         "--model", out / "ar-hmm-L2.json"),
        ("predict", "--model", out / "c-hybrid.json"),
    ]
    for step in steps:
        assert run(step[0], "--config", config, "--out", out, *step[1:]) == 0


def test_every_command_is_byte_reproducible(small, tmp_path, capsys):
    pipeline(small, tmp_path / "first")
    pipeline(small, tmp_path / "second")
    a, b = digest(tmp_path / "first"), digest(tmp_path / "second")
    assert len(a) >= 15
    assert a == b
    capsys.readouterr()


def test_environment_log_level(small, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("REGIME_FORECAST_LOG", "info")
    assert run("fit-hmm", "--config", small, "--out", tmp_path) == 0
    assert "INFO regime_forecast" in capsys.readouterr().err
    monkeypatch.setenv("REGIME_FORECAST_LOG", "warning")
    assert run("fit-hmm", "--config", small, "--out", tmp_path) == 0
    assert capsys.readouterr().err == ""


def test_outputs_stay_in_out_dir(small, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run("synth", "--config", small, "--out", "nested/dir") == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["nested", "small.toml"]
    assert np.array_equal(sorted(p.name for p in (tmp_path / "nested" / "dir").iterdir()),
                          ["synth.csv", "synth_labels.csv"])
