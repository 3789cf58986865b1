import csv
import json
import os

import numpy as np
import pytest
import yaml

import dltune.experiment as ex
from conftest import blobs, numeric_table
from dltune.data_model import write_table
from dltune.experiment import ConfigError, config_from_dict, derive_seed, load_config, run_profile, run_report, run_sweep, run_tune
from dltune.report import read_trials


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    write_table(blobs(n=40, d=3, seed=1), d / "alpha.csv")
    write_table(blobs(n=50, d=2, seed=2), d / "beta.csv")
    # 150 rows leave 105 for training, so no grid batch size is clamped
    write_table(blobs(n=150, d=2, seed=3), d / "gamma.csv")
    return d


def config(data_dir, out, **over):
    raw = {
        "name": "t",
        "seed": 7,
        "data_dir": str(data_dir),
        "output_dir": str(out),
        "models": ["FFNN"],
        "strategy": {"name": "random", "n_trials": 5},
        "training": {"epochs": 2},
        "space": {"*": {"learning_rate": [0.1, 0.5], "hidden_dim": [2, 3]}},
        "datasets": ["alpha"],
    }
    raw.update(over)
    return config_from_dict(raw)


def lines(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize(
    "over,match",
    [
        ({"datasets": []}, "dataset"),
        ({"models": []}, "model"),
        ({"models": ["CNN"]}, "unknown model"),
        ({"strategy": "annealing"}, "unknown strategy"),
        ({"space": {"FFNN": {"momentum": [0.1]}}}, "unknown hyperparameter"),
        ({"models": ["RNN"], "space": {"RNN": {"hidden_dropout": [0.1]}}}, "not available"),
        ({"models": ["DBN"], "preprocessing": {"normalize": False}}, "DBN"),
        ({"training": {"epochs": 2, "momentum": 0.9}}, "unknown training"),
        ({"colour": "blue"}, "unknown config"),
    ],
)
def test_invalid_configs(tmp_path, over, match):
    with pytest.raises(ConfigError, match=match):
        config(tmp_path, tmp_path / "out", **over)


def test_seed_is_required(tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict({"datasets": ["a"], "models": ["FFNN"]})


def test_yaml_paths_resolve_against_config_file(tmp_path, data_dir):
    path = tmp_path / "conf" / "x.yaml"
    path.parent.mkdir()
    path.write_text(yaml.safe_dump({"seed": 1, "models": ["FFNN"], "data_dir": "../data", "datasets": ["alpha"]}))
    cfg = load_config(path)
    assert os.path.samefile(cfg.datasets[0].path, data_dir / "alpha.csv")
    assert cfg.datasets[0].format == "csv"
    with pytest.raises(ConfigError, match="YAML"):
        path.write_text("seed: [1,")
        load_config(path)


def test_derive_seed_is_stable_and_separates_parts():
    assert derive_seed(1, "d", "FFNN", 0) == derive_seed(1, "d", "FFNN", 0)
    assert derive_seed(1, "d", "FFNN", 0) != derive_seed(1, "d", "FFNN", 1)
    assert derive_seed(1, "ab", "c") != derive_seed(1, "a", "bc")
    assert 0 <= derive_seed("x") < 2**64


def test_grid_with_default_space_gives_900_rows(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", datasets=["gamma"], strategy="grid", space={}, training={"epochs": 1})
    assert run_tune(cfg) == 0
    rows = read_trials([tmp_path / "out" / "trials.csv"])
    assert len(rows) == 900
    assert len({(r["learning_rate"], r["batch_size"], r["hidden_dim"]) for r in rows}) == 900


def test_product_of_datasets_and_models(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", datasets=["alpha", "beta"], models=["FFNN", "SAE"],
                 strategy={"name": "random", "n_trials": 10})
    assert run_tune(cfg) == 0
    rows = read_trials([tmp_path / "out" / "trials.csv"])
    assert len(rows) == 40
    assert [r["trial"] for r in rows[:10]] == list(range(10))
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert {k["dataset"] for k in summary["kruskal_wallis"]} == {"alpha", "beta"}


def test_adding_a_dataset_leaves_existing_trials_alone(data_dir, tmp_path):
    run_tune(config(data_dir, tmp_path / "one"))
    run_tune(config(data_dir, tmp_path / "two", datasets=["beta", "alpha"]))
    alpha_one = read_trials([tmp_path / "one" / "trials.csv"])
    alpha_two = [r for r in read_trials([tmp_path / "two" / "trials.csv"]) if r["dataset"] == "alpha"]
    assert alpha_one == alpha_two


def test_parallel_run_matches_serial(data_dir, tmp_path):
    run_tune(config(data_dir, tmp_path / "serial"))
    run_tune(config(data_dir, tmp_path / "pool", jobs=2))
    assert (tmp_path / "serial" / "trials.csv").read_bytes() == (tmp_path / "pool" / "trials.csv").read_bytes()


def test_batch_size_clamped_to_training_rows(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", training={"batch_size": 100, "epochs": 1}, strategy="baseline")
    run_tune(cfg)
    (r,) = read_trials([tmp_path / "out" / "trials.csv"])
    assert r["batch_size"] == 28


def test_diverged_trials_are_recorded(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    rng = np.random.default_rng(0)
    write_table(numeric_table(np.column_stack([rng.normal(scale=1e150, size=(30, 2)), np.arange(30) % 2])), d / "wild.csv")
    cfg = config(d, tmp_path / "out", datasets=["wild"], strategy="baseline",
                 preprocessing={"normalize": False}, training={"learning_rate": 50.0, "activation": "relu", "epochs": 3})
    assert run_tune(cfg) == 0
    (r,) = read_trials([tmp_path / "out" / "trials.csv"])
    assert r["status"] == "diverged" and r["test_accuracy"] == 0.0


def test_nelder_mead_strategy_respects_budget(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", strategy={"name": "nelder_mead", "max_evals": 12})
    run_tune(cfg)
    rows = read_trials([tmp_path / "out" / "trials.csv"])
    assert 1 <= len(rows) <= 12 and [r["trial"] for r in rows] == list(range(len(rows)))


def test_report_reproduces_tune_outputs(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", datasets=["alpha", "beta"], models=["FFNN", "DBN"])
    run_tune(cfg)
    run_report([tmp_path / "out" / "trials.csv"], tmp_path / "again")
    for name in ("trials.csv", "summary.json", "boxdata.csv", "ranking.csv", "timing.csv"):
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_profile_partial_failure(data_dir, tmp_path):
    (data_dir / "broken.csv").write_text("a,b\n1\n")
    cfg = config(data_dir, tmp_path / "out", datasets=["alpha", "broken", "beta"])
    assert run_profile(cfg) == 1
    assert sorted(os.listdir(tmp_path / "out" / "profiles")) == ["alpha.json", "beta.json"]
    assert [r["dataset"] for r in lines(tmp_path / "out" / "errors.csv")] == ["broken"]
    assert [r["name"] for r in lines(tmp_path / "out" / "sparsity.csv")] == ["alpha", "beta"]


def test_missing_dataset_fails_tune_partially(data_dir, tmp_path):
    assert run_tune(config(data_dir, tmp_path / "out", datasets=["alpha", "ghost"])) == 1
    assert len(read_trials([tmp_path / "out" / "trials.csv"])) == 5


@pytest.fixture
def constant_scores(monkeypatch):
    monkeypatch.setattr(ex, "fit_and_score", lambda kind, table, plan, cfg: (0.75, 0.75, []))


def test_default_sweep_writes_208_rows_per_model(data_dir, tmp_path, constant_scores):
    cfg = config(data_dir, tmp_path / "out", models=["FFNN", "RNN", "SAE", "DBN"], space={},
                 strategy="lr_sweep", splits={"folds": 2, "repeats": 1})
    assert run_sweep(cfg) == 0
    for m in ("FFNN", "RNN", "SAE", "DBN"):
        rows = lines(tmp_path / "out" / f"curve_{m}.csv")
        assert len(rows) == 208 and rows[0]["n_samples"] == "2"
    kw = json.loads((tmp_path / "out" / "sweep_summary.json").read_text())["kruskal_wallis"]
    assert kw["reject_h0"] is False


def test_single_model_sweep_skips_kruskal(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", strategy={"name": "lr_sweep", "learning_rates": [0.1, 0.4]},
                 splits={"folds": 2, "repeats": 2})
    assert run_sweep(cfg) == 0
    assert sorted(p for p in os.listdir(tmp_path / "out") if p.startswith("curve_")) == ["curve_FFNN.csv"]
    assert "note" in json.loads((tmp_path / "out" / "sweep_summary.json").read_text())["kruskal_wallis"]


def test_sweep_cv_can_stay_inside_training_split(data_dir, tmp_path):
    cfg = config(data_dir, tmp_path / "out", splits={"folds": 4, "repeats": 1, "cv_on_train_split": True})
    plans = ex.sweep_plans(40, cfg, "alpha")
    used = {i for p in plans for i in p.train + p.test}
    assert len(used) == 28
