"""Trial-log files and the summary artifacts derived from them.

Files written into an output directory:

``trials.csv``
    one row per trial: ``trial, dataset, model, strategy, normalized``, the
    resolved hyperparameters (``learning_rate, batch_size, numepochs,
    hidden_dim, hidden_dropout, visible_dropout``), ``seed,
    validation_accuracy, test_accuracy, status``.
``trial_times.csv``
    ``trial, dataset, model, strategy, wall_time`` (seconds). Kept apart so
    ``trials.csv`` is byte-identical across reruns.
``summary.json``
    per (dataset, model, strategy, normalized) group: trial count, mean/std
    of validation and test accuracy, best trial; plus Kruskal-Wallis tests
    across models for each (dataset, strategy, normalized).
``boxdata.csv``
    ``panel, model, strategy, normalized, n, min, q1, median, q3, max, mean``
    over the per-dataset best-trial test accuracies.
``ranking.csv``
    ``model, strategy, normalized, rank, dataset, accuracy`` (best-trial test
    accuracy, descending).
``timing.csv``
    ``method, mean_seconds``: mean over datasets of each search's total time.
"""

from __future__ import annotations

import csv
import json
import os
import string
from collections import Counter, defaultdict
from typing import Iterable, Mapping, Sequence

from dltune.stats import box_summary, kruskal_wallis, mean_accuracy, ranking_table, sort_key, timing_table

HYPERPARAMETERS = ("learning_rate", "batch_size", "numepochs", "hidden_dim", "hidden_dropout", "visible_dropout")
TRIAL_COLUMNS = (
    ("trial", int),
    ("dataset", str),
    ("model", str),
    ("strategy", str),
    ("normalized", str),
    ("learning_rate", float),
    ("batch_size", int),
    ("numepochs", int),
    ("hidden_dim", int),
    ("hidden_dropout", float),
    ("visible_dropout", float),
    ("seed", int),
    ("validation_accuracy", float),
    ("test_accuracy", float),
    ("status", str),
)
TIME_COLUMNS = (("trial", int), ("dataset", str), ("model", str), ("strategy", str), ("wall_time", float))
GROUP_KEYS = ("dataset", "model", "strategy", "normalized")


class LogSchemaError(ValueError):
    pass


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def _write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_trials(rows: Sequence[Mapping], path) -> None:
    names = [c for c, _ in TRIAL_COLUMNS]
    _write_csv(path, names, ([r[c] for c in names] for r in rows))


def write_times(rows: Sequence[Mapping], path) -> None:
    names = [c for c, _ in TIME_COLUMNS]
    _write_csv(path, names, ([r[c] for c in names] for r in rows))


def _read(path, schema) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = [c for c, _ in schema]
        if header != expected:
            header = header or []
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            detail = []
            if missing:
                detail.append(f"missing columns {missing}")
            if extra:
                detail.append(f"unexpected columns {extra}")
            if not detail:
                detail.append(f"columns out of order: {header}")
            raise LogSchemaError(f"{path}: " + "; ".join(detail))
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(schema):
                raise LogSchemaError(f"{path}: line {lineno} has {len(rec)} fields, expected {len(schema)}")
            try:
                rows.append({c: typ(v) for (c, typ), v in zip(schema, rec)})
            except ValueError as exc:
                raise LogSchemaError(f"{path}: line {lineno}: {exc}") from None
    return rows


def read_trials(paths: Sequence) -> list[dict]:
    rows = []
    for p in paths:
        rows += _read(p, TRIAL_COLUMNS)
    return rows


def read_times(paths: Sequence) -> list[dict]:
    rows = []
    for p in paths:
        rows += _read(p, TIME_COLUMNS)
    return rows


def _best_rows(rows: Sequence[Mapping]) -> dict[tuple, dict]:
    """Best trial (max validation accuracy, earliest on ties) per group, in log order."""
    best: dict[tuple, dict] = {}
    for r in rows:
        key = tuple(r[k] for k in GROUP_KEYS)
        if key not in best or r["validation_accuracy"] > best[key]["validation_accuracy"]:
            best[key] = r
    return best


def build_summary(rows: Sequence[Mapping]) -> dict:
    val = {m.key: m for m in mean_accuracy(rows, GROUP_KEYS, "validation_accuracy")}
    test = {m.key: m for m in mean_accuracy(rows, GROUP_KEYS, "test_accuracy")}
    best = _best_rows(rows)
    diverged = Counter(tuple(r[k] for k in GROUP_KEYS) for r in rows if r["status"] != "ok")
    groups = []
    for key in val:
        b = best[key]
        groups.append(
            {
                **dict(zip(GROUP_KEYS, key)),
                "n_trials": val[key].count,
                "n_diverged": diverged[key],
                "mean_validation_accuracy": val[key].mean,
                "std_validation_accuracy": val[key].std,
                "mean_test_accuracy": test[key].mean,
                "std_test_accuracy": test[key].std,
                "best": {
                    "trial": b["trial"],
                    **{h: b[h] for h in HYPERPARAMETERS},
                    "validation_accuracy": b["validation_accuracy"],
                    "test_accuracy": b["test_accuracy"],
                },
            }
        )

    samples: dict[tuple, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        samples[(r["dataset"], r["strategy"], r["normalized"])][r["model"]].append(r["validation_accuracy"])
    tests = []
    for key in sorted(samples, key=lambda k: tuple(sort_key(v) for v in k)):
        by_model = samples[key]
        models = sorted(by_model)
        entry = {"dataset": key[0], "strategy": key[1], "normalized": key[2], "models": models}
        if len(models) < 2:
            entry["note"] = "skipped: Kruskal-Wallis needs at least two models"
        else:
            res = kruskal_wallis([by_model[m] for m in models])
            entry.update({"H": res.statistic, "df": res.df, "p_value": res.p_value, "reject_h0": res.reject})
        tests.append(entry)
    return {"groups": groups, "kruskal_wallis": tests}


def best_accuracy_by_dataset(rows: Sequence[Mapping]) -> dict[tuple, dict[str, float]]:
    """(model, strategy, normalized) -> {dataset: best-trial test accuracy}."""
    out: dict[tuple, dict[str, float]] = defaultdict(dict)
    for (dataset, model, strategy, normalized), r in _best_rows(rows).items():
        out[(model, strategy, normalized)][dataset] = r["test_accuracy"]
    return out


def _panel(k: int) -> str:
    letters = string.ascii_lowercase
    return letters[k] if k < 26 else letters[k // 26 - 1] + letters[k % 26]


def write_reports(rows: Sequence[Mapping], out_dir, times: Sequence[Mapping] | None = None) -> None:
    """Write summary.json, boxdata.csv, ranking.csv and (given times) timing.csv."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(build_summary(rows), fh, indent=2)
        fh.write("\n")

    per_dataset = best_accuracy_by_dataset(rows)
    keys = sorted(per_dataset, key=lambda k: tuple(sort_key(v) for v in k))
    box_rows = []
    rank_rows = []
    for k, key in enumerate(keys):
        accs = per_dataset[key]
        b = box_summary(accs.values())
        box_rows.append([_panel(k), *key, len(accs), b.min, b.q1, b.median, b.q3, b.max, b.mean])
        for rank, (dataset, acc) in enumerate(ranking_table(accs), start=1):
            rank_rows.append([*key, rank, dataset, acc])
    _write_csv(
        os.path.join(out_dir, "boxdata.csv"),
        ["panel", "model", "strategy", "normalized", "n", "min", "q1", "median", "q3", "max", "mean"],
        box_rows,
    )
    _write_csv(
        os.path.join(out_dir, "ranking.csv"),
        ["model", "strategy", "normalized", "rank", "dataset", "accuracy"],
        rank_rows,
    )
    if times is not None:
        _write_csv(os.path.join(out_dir, "timing.csv"), ["method", "mean_seconds"], timing_table(times))
