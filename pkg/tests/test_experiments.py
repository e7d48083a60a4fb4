import csv
import json
import os

import numpy as np
import pytest

from cdwce import cli, experiments
from cdwce.experiments import ExperimentConfig
from cdwce.losses import ConfigurationError, LossSpec


def small_raw(tmp_path, **over):
    raw = {
        "dataset": {"synthetic": {"n_samples": 240, "input_dim": 4}},
        "model": {"hidden_dims": [8, 6]},
        "train": {"epochs": 3},
        "losses": [{"kind": "CE"}, {"kind": "CDW-CE", "alpha": 5}],
        "n_trials": 2,
        "master_seed": 3,
        "output_dir": str(tmp_path / "run"),
    }
    raw.update(over)
    return raw


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bench")
    cfg = ExperimentConfig(small_raw(tmp))
    report, trials = experiments.run_benchmark(cfg)
    return cfg, report, trials


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(small_raw(tmp_path, n_trials=0))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(small_raw(tmp_path, losses=[]))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(small_raw(tmp_path, losses=[{"kind": "CE"}, {"kind": "CE"}]))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(small_raw(tmp_path, bogus=1))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(small_raw(tmp_path, train={"epochs": 0}))


def test_trial_seeds_deterministic():
    assert experiments.trial_seed(0, 3) == experiments.trial_seed(0, 3)
    seeds = [experiments.trial_seed(0, t) for t in range(10)]
    assert len(set(seeds)) == 10
    assert all(0 <= s < 2**31 - 1 for s in seeds)


def test_outputs_written(bench):
    cfg, report, trials = bench
    out = cfg.output_dir
    names = set(os.listdir(out))
    assert {"aggregate.json", "trials.csv", "summary.md", "confusion_CE.csv", "confusion_CDW-CE_a_5.csv"} <= names
    assert any(n.startswith("roc_CE_class") for n in names)
    assert len(os.listdir(os.path.join(out, "trials"))) == 4
    assert all(t["status"] == "ok" for t in trials)


def test_json_roundtrip(bench):
    cfg, report, _ = bench
    assert experiments.load_report(os.path.join(cfg.output_dir, "aggregate.json")) == json.loads(json.dumps(report))


def test_csv_row_count(bench):
    cfg, report, _ = bench
    with open(os.path.join(cfg.output_dir, "trials.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2
    assert {r["loss"] for r in rows} == {"CE", "CDW-CE(a=5)"}


def test_markdown_layout(bench):
    _, report, _ = bench
    table = experiments.markdown_table(report, experiments.TABLE_MES)
    lines = table.strip().splitlines()
    assert len(lines) == 2 + 4
    assert lines[0] == "| Metric | CE | CDW-CE(a=5) |"
    assert all(line.count("|") == 4 for line in lines)


def test_aggregate_recomputable(bench):
    _, report, _ = bench
    for entry in report["losses"].values():
        for key, values in entry["trial_values"].items():
            vals = [v for v in values if v is not None]
            s = entry["summary"][key]
            if vals:
                assert s["mean"] == pytest.approx(np.mean(vals), abs=1e-15)
                assert s["std"] == pytest.approx(np.std(vals, ddof=1), abs=1e-15)


def test_mean_confusion_conserves_test_size(bench):
    _, report, trials = bench
    n_test = len(trials[0]["y_true"])
    for entry in report["losses"].values():
        assert np.sum(entry["mean_confusion"]) == pytest.approx(n_test)


def test_fair_comparison_same_split(bench):
    _, _, trials = bench
    by_trial = {}
    for t in trials:
        by_trial.setdefault(t["trial"], []).append(t)
    for group in by_trial.values():
        assert len({tuple(t["y_true"]) for t in group}) == 1
        assert len({t["seed"] for t in group}) == 1


def test_rerun_identical(bench, tmp_path):
    cfg, report, trials = bench
    again, trials2 = experiments.run_benchmark(ExperimentConfig(small_raw(tmp_path)), write=False)
    assert [t["metrics"] for t in trials] == [t["metrics"] for t in trials2]
    assert json.dumps(report["losses"], sort_keys=True) == json.dumps(again["losses"], sort_keys=True)


def test_parallel_matches_serial(bench, tmp_path):
    _, _, trials = bench
    _, par = experiments.run_benchmark(ExperimentConfig(small_raw(tmp_path)), jobs=2, write=False)
    assert [(t["loss"], t["trial"], t["metrics"]) for t in trials] == [(t["loss"], t["trial"], t["metrics"]) for t in par]


def test_separable_single_trial_perfect(tmp_path):
    raw = small_raw(tmp_path, n_trials=1, losses=[{"kind": "CE"}], train={"epochs": 50},
                    dataset={"synthetic": {"n_samples": 300, "input_dim": 4, "noise_sigma": 0.0}})
    report, _ = experiments.run_benchmark(ExperimentConfig(raw), write=False)
    assert report["losses"]["CE"]["summary"]["accuracy"]["mean"] == 1.0


def test_emit_report_deterministic_and_errors(bench, tmp_path):
    _, report, _ = bench
    p1 = experiments.emit_report(report, "markdown", tmp_path / "a")
    p2 = experiments.emit_report(report, "markdown", tmp_path / "b")
    assert open(p1).read() == open(p2).read()
    with pytest.raises(ValueError):
        experiments.emit_report(report, "xml", tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        experiments.emit_report(report, "json", blocker / "sub")


def test_alpha_sweep(tmp_path):
    cfg = ExperimentConfig(small_raw(tmp_path, n_trials=1, train={"epochs": 2}))
    report, _ = experiments.run_alpha_sweep(cfg, [1, 2, 3])
    with open(os.path.join(cfg.output_dir, "sweep_alpha.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["alpha"]) for r in rows] == [1.0, 2.0, 3.0]
    for bad in ([], [1, 1], [0, 2]):
        with pytest.raises(ConfigurationError):
            experiments.run_alpha_sweep(cfg, bad, write=False)


def test_single_alpha_equals_benchmark(tmp_path):
    cfg = ExperimentConfig(small_raw(tmp_path, losses=[{"kind": "CDW-CE", "alpha": 2}]))
    sweep, _ = experiments.run_alpha_sweep(cfg, [2], write=False)
    bench, _ = experiments.run_benchmark(cfg, write=False)
    assert sweep["losses"] == bench["losses"]


def test_margin_sweep_zero_matches_plain(tmp_path):
    cfg = ExperimentConfig(small_raw(tmp_path))
    sweep, st = experiments.run_margin_sweep(cfg, 5, [0.0], write=False)
    plain, pt = experiments.run_benchmark(cfg.with_losses([{"kind": "CDW-CE", "alpha": 5}]), write=False)
    assert [t["metrics"] for t in st] == [t["metrics"] for t in pt]
    assert [t["y_pred"] for t in st] == [t["y_pred"] for t in pt]


def test_margin_sweep_rows_and_errors(tmp_path):
    cfg = ExperimentConfig(small_raw(tmp_path, n_trials=1, train={"epochs": 2}))
    experiments.run_margin_sweep(cfg, 5, [0.0025, 0.025, 0.05])
    with open(os.path.join(cfg.output_dir, "sweep_margin.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["margin"]) for r in rows] == [0.0025, 0.025, 0.05]
    for bad in ([0.5], [0.1, 0.1], [-0.1], []):
        with pytest.raises(ConfigurationError):
            experiments.run_margin_sweep(cfg, 5, bad, write=False)


def test_divergence_recorded(tmp_path, monkeypatch):
    from cdwce import trainer

    def boom(*a, **k):
        raise trainer.DivergenceError(0, 0, float("nan"))

    monkeypatch.setattr(trainer, "train", boom)
    cfg = ExperimentConfig(small_raw(tmp_path, n_trials=1))
    report, trials = experiments.run_benchmark(cfg)
    assert all(t["status"] == "diverged" for t in trials)
    assert report["losses"]["CE"]["incomplete"] and report["losses"]["CE"]["failed"] == [0]
    assert "Incomplete" in open(os.path.join(cfg.output_dir, "summary.md")).read()


# ---- CLI -----------------------------------------------------------------


def test_cli_bench(tmp_path):
    out = tmp_path / "cli"
    code = cli.main(["bench", "--out", str(out), "--trials", "1", "--epochs", "2", "--n-samples", "200",
                     "--loss", "CE", "--loss", "CDW-CE:alpha=3"])
    assert code == 0
    report = experiments.load_report(out / "aggregate.json")
    assert report["loss_order"] == ["CE", "CDW-CE(a=3)"]


def test_cli_config_error_exit_code(tmp_path):
    assert cli.main(["bench", "--out", str(tmp_path), "--trials", "0"]) == 1
    assert cli.main(["bench", "--out", str(tmp_path), "--loss", "CDW-CE:alpha=-1"]) == 1
    assert cli.main(["sweep-margin", "--out", str(tmp_path), "--margins", "0.7"]) == 1
    assert cli.main(["bench", "--config", str(tmp_path / "missing.json")]) == 1


def test_cli_divergence_exit_code(tmp_path, monkeypatch):
    from cdwce import trainer

    def boom(*a, **k):
        raise trainer.DivergenceError(0, 0, float("inf"))

    monkeypatch.setattr(trainer, "train", boom)
    assert cli.main(["bench", "--out", str(tmp_path / "d"), "--trials", "1", "--loss", "CE"]) == 2


def test_cli_config_file_with_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(small_raw(tmp_path, n_trials=3)))
    out = tmp_path / "over"
    assert cli.main(["bench", "--config", str(cfg_path), "--trials", "1", "--out", str(out), "--seed", "7"]) == 0
    report = experiments.load_report(out / "aggregate.json")
    assert report["config"]["n_trials"] == 1 and report["config"]["master_seed"] == 7


def test_cli_gen_data_and_csv_bench(tmp_path):
    csv_path = tmp_path / "d.csv"
    assert cli.main(["gen-data", "--out", str(csv_path), "--n-samples", "200", "--input-dim", "3"]) == 0
    with open(csv_path) as fh:
        header = fh.readline().strip().split(",")
    assert header == ["x0", "x1", "x2", "label"]
    out = tmp_path / "csvrun"
    assert cli.main(["bench", "--csv", str(csv_path), "--out", str(out), "--trials", "1", "--epochs", "2",
                     "--loss", "CORN"]) == 0


def test_cli_report(bench, tmp_path):
    cfg, _, _ = bench
    out = tmp_path / "rep"
    assert cli.main(["report", "--config", os.path.join(cfg.output_dir, "aggregate.json"), "--out", str(out),
                     "--format", "csv", "--format", "markdown"]) == 0
    assert sorted(os.listdir(out)) == ["summary.md", "trials.csv"]


def test_parse_loss():
    assert cli.parse_loss("CDW-CE+margin:alpha=5,margin=0.05") == {"kind": "CDW-CE+margin", "alpha": 5.0, "margin": 0.05}
    with pytest.raises(ConfigurationError):
        cli.parse_loss("CE:alpha")
    assert LossSpec.from_dict(cli.parse_loss("CO2:lam=2"), num_classes=4).lam == 2.0


def test_aggregate_independent_of_output_dir(tmp_path):
    paths = []
    for name in ("one", "two"):
        cfg = ExperimentConfig(small_raw(tmp_path, n_trials=1, output_dir=str(tmp_path / name)))
        experiments.run_benchmark(cfg)
        paths.append(os.path.join(cfg.output_dir, "aggregate.json"))
    assert open(paths[0], "rb").read() == open(paths[1], "rb").read()
