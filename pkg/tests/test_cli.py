import yaml

from dltune.cli import main
from dltune.data_model import write_table
from dltune.report import read_trials, write_trials
from conftest import blobs
from test_report import row


def write_config(tmp_path, **over):
    data = tmp_path / "data"
    data.mkdir(exist_ok=True)
    write_table(blobs(n=40, d=3), data / "alpha.csv")
    raw = {"seed": 3, "data_dir": "data", "output_dir": str(tmp_path / "out"), "models": ["FFNN"],
           "datasets": ["alpha"], "strategy": {"name": "random", "n_trials": 4}, "training": {"epochs": 2}}
    raw.update(over)
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def test_tune_success_and_overrides(tmp_path):
    path = write_config(tmp_path)
    assert main(["tune", "--config", path, "--out", str(tmp_path / "o1"), "--seed", "9", "--strategy", "baseline"]) == 0
    (r,) = read_trials([tmp_path / "o1" / "trials.csv"])
    assert r["strategy"] == "baseline"
    assert main(["tune", "--config", path, "--jobs", "2"]) == 0
    assert len(read_trials([tmp_path / "out" / "trials.csv"])) == 4


def test_seed_override_changes_trials(tmp_path):
    path = write_config(tmp_path)
    main(["tune", "--config", path, "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["tune", "--config", path, "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "trials.csv").read_bytes() != (tmp_path / "b" / "trials.csv").read_bytes()


def test_config_errors_exit_2(tmp_path):
    assert main(["tune", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["tune", "--config", write_config(tmp_path, datasets=[])]) == 2
    assert main(["tune", "--config", write_config(tmp_path, strategy="lr_sweep")]) == 2


def test_partial_failure_exit_1(tmp_path):
    assert main(["profile", "--config", write_config(tmp_path, datasets=["alpha", "ghost"])]) == 1


def test_sweep_and_report(tmp_path):
    path = write_config(tmp_path, strategy={"name": "lr_sweep", "learning_rates": [0.2, 0.6]},
                        splits={"folds": 2, "repeats": 1})
    assert main(["sweep-lr", "--config", path]) == 0
    assert (tmp_path / "out" / "curve_FFNN.csv").exists()
    write_trials([row(i) for i in range(50)], tmp_path / "a.csv")
    write_trials([row(i, dataset="d2") for i in range(50)], tmp_path / "b.csv")
    assert main(["report", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path / "rep")]) == 0
    assert len(read_trials([tmp_path / "rep" / "trials.csv"])) == 100
    (tmp_path / "bad.csv").write_text("nope\n")
    assert main(["report", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "rep2")]) == 2
