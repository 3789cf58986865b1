"""Declarative experiments: load datasets, preprocess, search, report.

A config is a YAML mapping; see ``configs/`` for the bundled experiments.
Every random choice is derived from the master ``seed`` by hashing it with
the dataset name, model and trial index, so adding a dataset or model never
changes the trials of the others.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from functools import partial
from typing import Any, Mapping

import yaml

from dltune.catalog import local_path
from dltune.data_model import DataError, DataTable, load_table, preprocess_all, profile, sparsity
from dltune.nn import (
    DivergenceError,
    StoppingCriterion,
    TrainConfig,
    TrainingError,
    accuracy,
    dbn_classify,
    dbn_predict,
    dbn_pretrain,
    ffnn_predict,
    ffnn_train,
    rnn_predict,
    rnn_train_table,
    sae_finetune_classify,
    sae_predict,
    sae_pretrain,
)
from dltune.nn.common import DROPOUT_APPLICABILITY, MODEL_KINDS
from dltune.report import HYPERPARAMETERS, read_times, read_trials, write_reports, write_times, write_trials
from dltune.search import (
    ParamSpace,
    TrialResult,
    default_lr_grid,
    default_space,
    grid_assignments,
    lr_sweep,
    nelder_mead_search,
    random_assignments,
)
from dltune.splits import SplitPlan, holdout, repeated_cv, three_way
from dltune.stats import kruskal_wallis

log = logging.getLogger(__name__)

STRATEGIES = ("baseline", "grid", "random", "nelder_mead", "lr_sweep")


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSpec:
    name: str
    path: str
    format: str = "arff"
    label: str | int = -1


@dataclass
class PreprocessSpec:
    factor_policy: str = "level_index"
    normalize: bool = True
    exclude_label: bool = True
    convert_features: bool = True


@dataclass
class StrategySpec:
    name: str = "random"
    n_trials: int = 50
    max_evals: int = 50
    lr_points: int = 208
    lr_low: float = 0.005
    lr_high: float = 0.823
    learning_rates: list | None = None


@dataclass
class SplitSpec:
    folds: int = 10
    repeats: int = 10
    # run the learning-rate sweep's CV inside the 70% training part only
    cv_on_train_split: bool = False


@dataclass
class TrainingSpec:
    learning_rate: float = 0.1
    batch_size: int = 10
    epochs: int = 20
    hidden_dim: int = 5
    hidden_dropout: float = 0.0
    visible_dropout: float = 0.0
    activation: str = "sigmoid"
    pretrain_epochs: int = 5
    min_loss_delta: float = 0.0
    patience: int = 0


@dataclass
class ExperimentConfig:
    name: str
    datasets: list[DatasetSpec]
    models: list[str]
    seed: int
    strategy: StrategySpec = field(default_factory=StrategySpec)
    preprocessing: PreprocessSpec = field(default_factory=PreprocessSpec)
    splits: SplitSpec = field(default_factory=SplitSpec)
    training: TrainingSpec = field(default_factory=TrainingSpec)
    # model kind (or "*") -> {axis: [values] | {low, high}}
    space: dict = field(default_factory=dict)
    output_dir: str = "runs/latest"
    jobs: int = 1

    def validate(self) -> None:
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.models:
            raise ConfigError("at least one model is required")
        for m in self.models:
            if m not in MODEL_KINDS:
                raise ConfigError(f"unknown model {m!r}; expected one of {MODEL_KINDS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("an integer seed is required")
        if self.strategy.name not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy.name!r}; expected one of {STRATEGIES}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if "DBN" in self.models and not self.preprocessing.normalize:
            raise ConfigError("DBN needs inputs in [0, 1]; enable normalization")
        for m in self.models:
            space = self.space_for(m)
            for axis in space.names:
                if axis not in HYPERPARAMETERS:
                    raise ConfigError(f"unknown hyperparameter axis {axis!r}")
                if axis.endswith("_dropout") and axis not in DROPOUT_APPLICABILITY[m]:
                    raise ConfigError(f"{axis} is not available for {m}")

    def space_for(self, model: str) -> ParamSpace:
        spec = self.space.get(model, self.space.get("*"))
        if spec is None:
            return default_space(model)
        try:
            return ParamSpace.from_dict(spec, model)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad space for {model}: {exc}") from None


def _build(cls, data: Mapping | None, what: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {what} section: {exc}") from None


def config_from_dict(raw: Mapping, base_dir: str = ".") -> ExperimentConfig:
    """Build and validate a config; dataset paths resolve against ``data_dir``,
    which itself resolves against ``base_dir`` (the config file's directory)."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")
    raw = dict(raw)
    data_dir = os.path.normpath(os.path.join(base_dir, raw.pop("data_dir", ".")))
    datasets = []
    for entry in raw.pop("datasets", None) or []:
        if isinstance(entry, str):
            entry = {"name": entry}
        entry = dict(entry)
        if "name" not in entry:
            raise ConfigError(f"dataset entry without a name: {entry}")
        if "path" in entry:
            entry["path"] = os.path.join(data_dir, entry["path"])
        else:
            entry["path"] = local_path(entry["name"], data_dir) or os.path.join(data_dir, f"{entry['name']}.arff")
        entry.setdefault("format", "csv" if entry["path"].endswith(".csv") else "arff")
        datasets.append(_build(DatasetSpec, entry, "dataset"))
    if "seed" not in raw:
        raise ConfigError("config must set a seed")
    strategy = raw.pop("strategy", None)
    if isinstance(strategy, str):
        strategy = {"name": strategy}
    cfg = ExperimentConfig(
        name=str(raw.pop("name", "experiment")),
        datasets=datasets,
        models=list(raw.pop("models", None) or []),
        seed=raw.pop("seed"),
        strategy=_build(StrategySpec, strategy, "strategy"),
        preprocessing=_build(PreprocessSpec, raw.pop("preprocessing", None), "preprocessing"),
        splits=_build(SplitSpec, raw.pop("splits", None), "splits"),
        training=_build(TrainingSpec, raw.pop("training", None), "training"),
        space=dict(raw.pop("space", None) or {}),
        output_dir=str(raw.pop("output_dir", "runs/latest")),
        jobs=int(raw.pop("jobs", 1)),
    )
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    cfg.validate()
    return cfg


def load_config(path, data_dir: str | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if isinstance(raw, dict) and data_dir is not None:
        raw = {**raw, "data_dir": os.path.abspath(data_dir)}
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))


def derive_seed(*parts) -> int:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ------------------------------------------------------------------ datasets


def load_datasets(config: ExperimentConfig):
    """Load and preprocess every dataset; failures are collected, not raised."""
    loaded, errors = [], []
    pre = config.preprocessing
    for spec in config.datasets:
        try:
            table = load_table(spec.path, spec.format, spec.label, name=spec.name)
            tables, slist = preprocess_all(
                [table],
                factor_policy=pre.factor_policy,
                seed=derive_seed(config.seed, spec.name, "factors"),
                normalize=pre.normalize,
                exclude_label=pre.exclude_label,
                convert_features=pre.convert_features,
            )
        except (OSError, DataError, ValueError) as exc:
            log.error("dataset %s: %s", spec.name, exc)
            errors.append((spec.name, str(exc)))
            continue
        loaded.append((spec, tables[0], slist[0]))
    return loaded, errors


# ------------------------------------------------------------------- trials


def make_train_config(assignment: Mapping, training: TrainingSpec, seed: int, n_train: int) -> TrainConfig:
    stopping = None
    if training.patience > 0:
        stopping = StoppingCriterion(10**9, training.min_loss_delta, training.patience)
    return TrainConfig(
        learning_rate=float(assignment.get("learning_rate", training.learning_rate)),
        # clamp: a batch can never exceed the training rows available
        batch_size=min(int(assignment.get("batch_size", training.batch_size)), n_train),
        epochs=int(assignment.get("numepochs", training.epochs)),
        hidden_dims=(int(assignment.get("hidden_dim", training.hidden_dim)),),
        hidden_dropout=float(assignment.get("hidden_dropout", training.hidden_dropout)),
        visible_dropout=float(assignment.get("visible_dropout", training.visible_dropout)),
        activation=training.activation,
        seed=seed,
        stopping=stopping,
        pretrain_epochs=training.pretrain_epochs,
    )


def fit_and_score(kind: str, table: DataTable, plan: SplitPlan, config: TrainConfig):
    """Train ``kind`` on ``plan.train``; returns (validation acc, test acc, loss trace).

    Without a validation part the validation accuracy is the test accuracy.
    """
    X, y = table.features, table.labels
    train = list(plan.train)
    if kind == "FFNN":
        model, trace = ffnn_train(table, plan, config)
        predict = partial(ffnn_predict, model)
    elif kind == "RNN":
        model, trace = rnn_train_table(table, plan, config)
        predict = partial(rnn_predict, model)
    elif kind == "SAE":
        stack = sae_pretrain(X[train], config)
        model, trace = sae_finetune_classify(stack, table, plan, config)
        predict = partial(sae_predict, model)
    elif kind == "DBN":
        stack = dbn_pretrain(X[train], config)
        model, trace = dbn_classify(stack, table, plan, config)
        predict = partial(dbn_predict, model)
    else:
        raise TrainingError(f"unknown model kind {kind!r}")
    test = list(plan.test)
    test_acc = accuracy(predict(X[test])[0], y[test])
    if plan.validation:
        val = list(plan.validation)
        val_acc = accuracy(predict(X[val])[0], y[val])
    else:
        val_acc = test_acc
    return val_acc, test_acc, trace


@dataclass(frozen=True)
class TrialContext:
    dataset: str
    model: str
    strategy: str
    normalized: bool
    table: DataTable
    plan: SplitPlan
    training: TrainingSpec
    master_seed: int


def run_trial(ctx: TrialContext, index: int, assignment: Mapping):
    """One evaluation; returns (trials.csv row, trial_times.csv row, TrialResult)."""
    seed = derive_seed(ctx.master_seed, ctx.dataset, ctx.model, ctx.strategy, index)
    cfg = make_train_config(assignment, ctx.training, seed, len(ctx.plan.train))
    start = time.perf_counter()
    try:
        val_acc, test_acc, trace = fit_and_score(ctx.model, ctx.table, ctx.plan, cfg)
        status = "ok"
    except DivergenceError as exc:
        log.info("%s/%s trial %d diverged: %s", ctx.dataset, ctx.model, index, exc)
        val_acc, test_acc, trace, status = 0.0, 0.0, [], "diverged"
    elapsed = time.perf_counter() - start
    row = {
        "trial": index,
        "dataset": ctx.dataset,
        "model": ctx.model,
        "strategy": ctx.strategy,
        "normalized": "true" if ctx.normalized else "false",
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "numepochs": cfg.epochs,
        "hidden_dim": cfg.hidden_dims[0],
        "hidden_dropout": cfg.hidden_dropout,
        "visible_dropout": cfg.visible_dropout,
        "seed": seed,
        "validation_accuracy": val_acc,
        "test_accuracy": test_acc,
        "status": status,
    }
    timing = {k: row[k] for k in ("trial", "dataset", "model", "strategy")}
    timing["wall_time"] = elapsed
    result = TrialResult(dict(assignment), val_acc, test_acc, elapsed, tuple(trace), status)
    return row, timing, result


def _star(fn, args):
    return fn(*args)


@contextmanager
def _mapper(jobs: int):
    """Order-preserving map, in a process pool when ``jobs > 1``."""
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield partial(pool.map, chunksize=4)


def search_trials(ctx: TrialContext, space: ParamSpace, strategy: StrategySpec, master_seed: int, map_fn=map):
    """Run one strategy for one (dataset, model); returns the run_trial outputs in trial order."""
    if strategy.name == "baseline":
        assignments = [{}]
    elif strategy.name == "grid":
        assignments = grid_assignments(space)
    elif strategy.name == "random":
        assignments = random_assignments(
            space, strategy.n_trials, derive_seed(master_seed, ctx.dataset, ctx.model, "random")
        )
    elif strategy.name == "nelder_mead":
        outputs = []

        def evaluate(assignment):
            out = run_trial(ctx, len(outputs), assignment)
            outputs.append(out)
            return out[2]

        nelder_mead_search(space, evaluate, strategy.max_evals)
        return outputs
    else:
        raise ConfigError(f"strategy {strategy.name!r} is not a search strategy")
    job = partial(run_trial, ctx)
    return list(map_fn(partial(_star, job), list(enumerate(assignments))))


def run_tune(config: ExperimentConfig, jobs: int | None = None) -> int:
    """Search every (dataset, model) and write the trial logs and reports.

    Returns 0, or 1 when some dataset could not be loaded.
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    loaded, errors = load_datasets(config)
    rows, times = [], []
    with _mapper(jobs or config.jobs) as map_fn:
        for spec, table, _ in loaded:
            plan = three_way(table.n_instances, derive_seed(config.seed, spec.name, "split"))
            for model in config.models:
                ctx = TrialContext(
                    spec.name, model, config.strategy.name, config.preprocessing.normalize,
                    table, plan, config.training, config.seed,
                )
                log.info("tuning %s on %s with %s", model, spec.name, config.strategy.name)
                for row, timing, _ in search_trials(ctx, config.space_for(model), config.strategy, config.seed, map_fn):
                    rows.append(row)
                    times.append(timing)
    trials_path = os.path.join(out, "trials.csv")
    times_path = os.path.join(out, "trial_times.csv")
    write_trials(rows, trials_path)
    write_times(times, times_path)
    _write_errors(out, errors)
    if rows:
        write_reports(read_trials([trials_path]), out, read_times([times_path]))
    return 1 if errors else 0


def run_report(log_paths, out_dir: str) -> None:
    """Merge trial logs (and sibling trial_times.csv files) and rebuild the reports."""
    rows = read_trials(log_paths)
    time_paths = [os.path.join(os.path.dirname(os.path.abspath(p)), "trial_times.csv") for p in log_paths]
    times = read_times(time_paths) if all(os.path.exists(p) for p in time_paths) else None
    os.makedirs(out_dir, exist_ok=True)
    write_trials(rows, os.path.join(out_dir, "trials.csv"))
    if times is not None:
        write_times(times, os.path.join(out_dir, "trial_times.csv"))
    if rows:
        write_reports(rows, out_dir, times)


def _write_errors(out: str, errors) -> None:
    path = os.path.join(out, "errors.csv")
    if not errors:
        if os.path.exists(path):
            os.remove(path)
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "error"])
        w.writerows(errors)


# ------------------------------------------------------------------ profile


def run_profile(config: ExperimentConfig) -> int:
    """Per-dataset profile JSON plus a sparsity table; 1 if any dataset failed."""
    out = config.output_dir
    os.makedirs(os.path.join(out, "profiles"), exist_ok=True)
    no_norm = replace(config, preprocessing=replace(config.preprocessing, normalize=False))
    loaded, errors = load_datasets(no_norm)
    rows = []
    for spec, table, s in loaded:
        prof = profile(table, spec.name)
        with open(os.path.join(out, "profiles", f"{spec.name}.json"), "w") as fh:
            fh.write(prof.to_json() + "\n")
        rows.append([spec.name, repr(s), repr(sparsity(table, include_label=False))])
    with open(os.path.join(out, "sparsity.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "sparsity", "sparsity_features_only"])
        w.writerows(rows)
    _write_errors(out, errors)
    return 1 if errors else 0


# -------------------------------------------------------------------- sweep


def sweep_plans(n: int, config: ExperimentConfig, dataset: str) -> list[SplitPlan]:
    seed = derive_seed(config.seed, dataset, "cv")
    folds, repeats = config.splits.folds, config.splits.repeats
    if config.splits.cv_on_train_split:
        base = holdout(n, derive_seed(config.seed, dataset, "holdout"))
        return [p.take(base.train) for p in repeated_cv(len(base.train), folds, repeats, seed)]
    return repeated_cv(n, folds, repeats, seed)


def _sweep_point(contexts, model: str, training: TrainingSpec, master_seed: int, lr: float) -> list[float]:
    accs = []
    for dataset, table, plans in contexts:
        for k, plan in enumerate(plans):
            seed = derive_seed(master_seed, dataset, model, "lr_sweep", repr(lr), k)
            cfg = make_train_config({"learning_rate": lr}, training, seed, len(plan.train))
            try:
                accs.append(fit_and_score(model, table, plan, cfg)[1])
            except DivergenceError:
                accs.append(0.0)
    return accs


def run_sweep(config: ExperimentConfig, jobs: int | None = None) -> int:
    """Learning-rate curve per model (mean CV test accuracy per point) and a
    Kruskal-Wallis test across the models' curves."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    loaded, errors = load_datasets(config)
    st = config.strategy
    lrs = [float(v) for v in st.learning_rates] if st.learning_rates else default_lr_grid(st.lr_points, st.lr_low, st.lr_high)
    contexts = [(spec.name, table, sweep_plans(table.n_instances, config, spec.name)) for spec, table, _ in loaded]
    curves = {}
    if contexts:
        with _mapper(jobs or config.jobs) as map_fn:
            for model in config.models:
                log.info("learning-rate sweep for %s over %d points", model, len(lrs))
                curve = lr_sweep(partial(_sweep_point, contexts, model, config.training, config.seed), lrs, map_fn)
                curves[model] = curve.mean_accuracy
                with open(os.path.join(out, f"curve_{model}.csv"), "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["learning_rate", "mean_accuracy", "n_samples"])
                    for lr, m, sample in zip(curve.learning_rates, curve.mean_accuracy, curve.samples):
                        w.writerow([repr(lr), repr(m), len(sample)])
    summary: dict[str, Any] = {"models": list(config.models), "points": len(lrs), "accuracy": "test_accuracy"}
    if len(curves) < 2:
        summary["kruskal_wallis"] = {"note": "skipped: Kruskal-Wallis needs at least two models"}
    else:
        res = kruskal_wallis([curves[m] for m in config.models])
        summary["kruskal_wallis"] = {"H": res.statistic, "df": res.df, "p_value": res.p_value, "reject_h0": res.reject}
    with open(os.path.join(out, "sweep_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _write_errors(out, errors)
    return 1 if errors or not contexts else 0
