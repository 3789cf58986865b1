import csv
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dltune.report import (
    LogSchemaError,
    TRIAL_COLUMNS,
    best_accuracy_by_dataset,
    build_summary,
    read_times,
    read_trials,
    write_reports,
    write_times,
    write_trials,
)
from dltune.stats import kruskal_wallis


def row(i, dataset="d1", model="FFNN", strategy="random", val=0.5, test=0.5, status="ok"):
    return {
        "trial": i, "dataset": dataset, "model": model, "strategy": strategy, "normalized": "true",
        "learning_rate": 0.1, "batch_size": 10, "numepochs": 20, "hidden_dim": 3,
        "hidden_dropout": 0.0, "visible_dropout": 0.0, "seed": 1000 + i,
        "validation_accuracy": val, "test_accuracy": test, "status": status,
    }


acc = st.floats(0, 1, allow_nan=False)


@settings(max_examples=30)
@given(st.lists(st.tuples(st.sampled_from(["FFNN", "RNN"]), acc, acc), min_size=1, max_size=20))
def test_trial_log_round_trip(tmp_path_factory, items):
    path = tmp_path_factory.mktemp("log") / "trials.csv"
    rows = [row(i, model=m, val=v, test=t) for i, (m, v, t) in enumerate(items)]
    write_trials(rows, path)
    assert read_trials([path]) == rows


def test_times_round_trip(tmp_path):
    rows = [{"trial": 0, "dataset": "d", "model": "SAE", "strategy": "grid", "wall_time": 0.125}]
    write_times(rows, tmp_path / "t.csv")
    assert read_times([tmp_path / "t.csv"]) == rows


def test_schema_mismatch_names_the_columns(tmp_path):
    path = tmp_path / "bad.csv"
    names = [c for c, _ in TRIAL_COLUMNS if c != "seed"] + ["extra"]
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(names)
    with pytest.raises(LogSchemaError, match=r"missing columns \['seed'\].*unexpected columns \['extra'\]"):
        read_trials([path])


def test_bad_cell_reports_line(tmp_path):
    path = tmp_path / "trials.csv"
    write_trials([row(0)], path)
    text = path.read_text().replace(",1000,", ",notanint,")
    path.write_text(text)
    with pytest.raises(LogSchemaError, match="line 2"):
        read_trials([path])


def test_merging_two_logs(tmp_path):
    write_trials([row(i) for i in range(50)], tmp_path / "a.csv")
    write_trials([row(i, dataset="d2") for i in range(50)], tmp_path / "b.csv")
    assert len(read_trials([tmp_path / "a.csv", tmp_path / "b.csv"])) == 100


def test_summary_groups_best_and_kruskal():
    rows = [row(i, val=v) for i, v in enumerate([0.2, 0.9, 0.9])]
    rows += [row(i, model="SAE", val=v, status=s) for i, (v, s) in enumerate([(0.1, "ok"), (0.0, "diverged")])]
    s = build_summary(rows)
    ffnn = next(g for g in s["groups"] if g["model"] == "FFNN")
    assert ffnn["n_trials"] == 3 and ffnn["best"]["trial"] == 1
    sae = next(g for g in s["groups"] if g["model"] == "SAE")
    assert sae["n_diverged"] == 1
    (kw,) = s["kruskal_wallis"]
    assert kw["models"] == ["FFNN", "SAE"]
    assert kw["H"] == kruskal_wallis([[0.2, 0.9, 0.9], [0.1, 0.0]]).statistic


def test_reports_are_byte_stable_and_rankings_descend(tmp_path):
    rows = [row(0, dataset=d, model=m, test=t) for d, m, t in
            [("a", "FFNN", 0.7), ("b", "FFNN", 0.9), ("c", "FFNN", 0.8), ("a", "DBN", 0.6), ("b", "DBN", 0.5)]]
    write_reports(rows, tmp_path / "one")
    write_reports(rows, tmp_path / "two")
    for name in ("summary.json", "boxdata.csv", "ranking.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    with open(tmp_path / "one" / "ranking.csv") as fh:
        ranks = [r for r in csv.DictReader(fh) if r["model"] == "FFNN"]
    assert [r["dataset"] for r in ranks] == ["b", "c", "a"]
    with open(tmp_path / "one" / "boxdata.csv") as fh:
        panels = list(csv.DictReader(fh))
    assert [(p["panel"], p["model"]) for p in panels] == [("a", "DBN"), ("b", "FFNN")]
    assert float(panels[1]["median"]) == 0.8
    assert json.loads((tmp_path / "one" / "summary.json").read_text())["groups"]


def test_best_accuracy_uses_validation_to_choose():
    rows = [row(0, val=0.9, test=0.4), row(1, val=0.5, test=1.0)]
    assert best_accuracy_by_dataset(rows) == {("FFNN", "random", "true"): {"d1": 0.4}}
