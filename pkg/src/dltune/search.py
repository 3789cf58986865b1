"""Hyperparameter search: exhaustive grid, budgeted random, Nelder-Mead simplex.

Grid and random search build their full assignment list before evaluating
anything, so evaluation can be farmed out through ``map_fn`` (any
order-preserving map, e.g. ``Executor.map``). The best trial is the one with
the highest validation accuracy; ties go to the earliest trial.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from dltune.nn.common import MODEL_KINDS


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple | None = None
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))
            if not self.values:
                raise ValueError(f"discrete axis {self.name!r} is empty")
        elif self.low is None or self.high is None or not self.low < self.high:
            raise ValueError(f"continuous axis {self.name!r} needs low < high")

    @property
    def discrete(self) -> bool:
        return self.values is not None

    @property
    def bounds(self) -> tuple[float, float]:
        if self.discrete:
            return float(min(self.values)), float(max(self.values))
        return float(self.low), float(self.high)

    def contains(self, value) -> bool:
        if self.discrete:
            return value in self.values
        return self.low <= value <= self.high


@dataclass(frozen=True)
class ParamSpace:
    axes: tuple[Axis, ...]
    model_kind: str = "FFNN"

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names in {names}")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")

    @classmethod
    def from_dict(cls, spec: Mapping, model_kind: str = "FFNN") -> ParamSpace:
        """``{name: [values...]}`` for discrete axes, ``{name: {low, high}}`` for continuous."""
        axes = []
        for name, dom in spec.items():
            if isinstance(dom, Mapping):
                axes.append(Axis(name, low=float(dom["low"]), high=float(dom["high"])))
            else:
                axes.append(Axis(name, tuple(dom)))
        return cls(tuple(axes), model_kind)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.axes]

    @property
    def is_discrete(self) -> bool:
        return all(a.discrete for a in self.axes)

    @property
    def grid_size(self) -> int:
        if not self.is_discrete:
            raise ValueError("continuous axes have no finite grid")
        return math.prod(len(a.values) for a in self.axes)

    def contains(self, assignment: Mapping) -> bool:
        return set(assignment) == set(self.names) and all(a.contains(assignment[a.name]) for a in self.axes)


@dataclass(frozen=True)
class Budget:
    """``max_trials`` evaluations; ``volume`` (V) and ``iterations`` (n) only
    scale the reported relative cost."""

    max_trials: int
    volume: int = 1
    iterations: int = 1

    def __post_init__(self):
        if min(self.max_trials, self.volume, self.iterations) < 1:
            raise ValueError("budget fields must be positive")


@dataclass(frozen=True)
class TrialResult:
    assignment: dict
    validation_accuracy: float
    test_accuracy: float
    wall_time: float = 0.0
    loss_trace: tuple[float, ...] = field(default=(), repr=False)
    status: str = "ok"

    def __post_init__(self):
        for name in ("validation_accuracy", "test_accuracy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.wall_time < 0:
            raise ValueError("wall_time must be >= 0")
        if self.status not in ("ok", "diverged"):
            raise ValueError(f"unknown status {self.status!r}")


Evaluate = Callable[[dict], TrialResult]


def select_best(trials: Sequence[TrialResult]) -> TrialResult:
    """Highest validation accuracy; the earliest trial wins ties."""
    if not trials:
        raise ValueError("no trials to select from")
    best = trials[0]
    for t in trials[1:]:
        if t.validation_accuracy > best.validation_accuracy:
            best = t
    return best


def _run(assignments: list[dict], evaluate: Evaluate, map_fn) -> list[TrialResult]:
    results = []
    for assignment, result in zip(assignments, map_fn(evaluate, assignments)):
        if result.assignment != assignment:
            result = replace(result, assignment=dict(assignment))
        results.append(result)
    return results


def grid_assignments(space: ParamSpace) -> list[dict]:
    """Cartesian product in lexicographic axis order (last axis fastest)."""
    if not space.axes:
        raise ValueError("empty parameter space")
    if not space.is_discrete:
        raise ValueError("grid search needs every axis to be discrete")
    names = space.names
    return [dict(zip(names, combo)) for combo in itertools.product(*(a.values for a in space.axes))]


def grid_search(space: ParamSpace, evaluate: Evaluate, map_fn=map) -> tuple[TrialResult, list[TrialResult]]:
    trials = _run(grid_assignments(space), evaluate, map_fn)
    return select_best(trials), trials


def random_assignments(space: ParamSpace, n_trials: int, seed: int) -> list[dict]:
    """``n_trials`` independent uniform draws; duplicates allowed."""
    if not space.axes:
        raise ValueError("empty parameter space")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_trials):
        draw = {}
        for a in space.axes:
            if a.discrete:
                draw[a.name] = a.values[int(rng.integers(len(a.values)))]
            else:
                draw[a.name] = float(rng.uniform(a.low, a.high))
        out.append(draw)
    return out


def random_search(
    space: ParamSpace, n_trials: int, seed: int, evaluate: Evaluate, map_fn=map
) -> tuple[TrialResult, list[TrialResult]]:
    trials = _run(random_assignments(space, n_trials, seed), evaluate, map_fn)
    return select_best(trials), trials


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    fun: float
    n_evals: int


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0,
    tolerance: float = 1e-8,
    max_evals: int | None = None,
    bounds: Sequence[tuple[float, float]] | None = None,
    initial_step=None,
) -> NelderMeadResult:
    """Minimize ``objective`` with the reflection/expansion/contraction/shrink simplex.

    Stops once every vertex lies within ``tolerance`` of the best vertex in
    both position (max-norm) and objective value, when all objective values
    coincide exactly, or when ``max_evals`` is spent. With ``bounds`` every
    vertex is clipped into the box before evaluation.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    d = len(x0)
    if d == 0 or not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be a finite, non-empty vector")
    max_evals = 200 * d if max_evals is None else max_evals
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        clip = lambda x: np.clip(x, lo, hi)  # noqa: E731
    else:
        clip = lambda x: x  # noqa: E731
    x0 = clip(x0)

    n_evals = 0

    def f(x):
        nonlocal n_evals
        n_evals += 1
        v = float(objective(x))
        return v if math.isfinite(v) else math.inf

    f0 = f(x0)
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at x0")

    if initial_step is None:
        if bounds is not None:
            step = 0.1 * (hi - lo)
        else:
            step = np.where(x0 != 0, 0.05 * np.abs(x0), 0.1)
    else:
        step = np.broadcast_to(np.asarray(initial_step, dtype=float), (d,))
    simplex = [x0]
    values = [f0]
    for i in range(d):
        if n_evals >= max_evals:
            break
        x = x0.copy()
        x[i] += step[i]
        x = clip(x)
        if bounds is not None and x[i] == x0[i]:
            x[i] = clip(x0 - step)[i]
        simplex.append(x)
        values.append(f(x))

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while n_evals < max_evals and len(simplex) == d + 1:
        order = sorted(range(d + 1), key=lambda k: values[k])
        simplex = [simplex[k] for k in order]
        values = [values[k] for k in order]
        f_spread = max(abs(v - values[0]) for v in values[1:])
        x_spread = max(np.max(np.abs(x - simplex[0])) for x in simplex[1:])
        if f_spread == 0.0 or (f_spread <= tolerance and x_spread <= tolerance):
            break

        centroid = np.mean(simplex[:-1], axis=0)
        xr = clip(centroid + alpha * (centroid - simplex[-1]))
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            if n_evals >= max_evals:
                simplex[-1], values[-1] = xr, fr
                break
            xe = clip(centroid + gamma * (xr - centroid))
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if n_evals >= max_evals:
            break
        if fr < values[-1]:
            xc = clip(centroid + rho * (xr - centroid))
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = clip(centroid + rho * (simplex[-1] - centroid))
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        for k in range(1, d + 1):
            if n_evals >= max_evals:
                break
            simplex[k] = clip(simplex[0] + sigma * (simplex[k] - simplex[0]))
            values[k] = f(simplex[k])

    best = int(np.argmin(values))
    return NelderMeadResult(np.array(simplex[best]), values[best], n_evals)


def _snap(axis: Axis, x: float):
    if not axis.discrete:
        return float(np.clip(x, axis.low, axis.high))
    values = axis.values
    return values[int(np.argmin([abs(float(v) - x) for v in values]))]


def nelder_mead_search(
    space: ParamSpace, evaluate: Evaluate, max_evals: int, tolerance: float = 1e-6
) -> tuple[TrialResult, list[TrialResult]]:
    """Nelder-Mead over the box spanned by the axes, maximizing validation accuracy.

    Discrete numeric axes are relaxed to their [min, max] range and each
    candidate is snapped to the nearest grid value. Every objective call is
    one recorded trial; the simplex starts at the box centre. Snapping makes
    the objective piecewise flat, so a simplex that collapses onto a plateau
    is restarted around the incumbent while budget remains and restarts keep
    improving.
    """
    if not space.axes:
        raise ValueError("empty parameter space")
    bounds = [a.bounds for a in space.axes]
    trials: list[TrialResult] = []

    def objective(x):
        assignment = {a.name: _snap(a, float(v)) for a, v in zip(space.axes, x)}
        result = _run([assignment], evaluate, map)[0]
        trials.append(result)
        return -result.validation_accuracy

    x0 = np.array([(lo + hi) / 2 for lo, hi in bounds])
    incumbent = math.inf
    while len(trials) < max_evals:
        r = nelder_mead(objective, x0, tolerance=tolerance, max_evals=max_evals - len(trials), bounds=bounds)
        if not r.fun < incumbent:
            break
        incumbent, x0 = r.fun, r.x
    return select_best(trials), trials


def _steps(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


LEARNING_RATES = _steps(0.1, 0.9, 0.1)
BATCH_SIZES = tuple(range(10, 101, 10))
NUM_EPOCHS = tuple(range(10, 101, 10))
HIDDEN_NODES = tuple(range(1, 11))


def default_space(model_kind: str) -> ParamSpace:
    """The three-axis experimental grid for one model family (9 x 10 x 10 = 900 points).

    RNN swaps batch size for the number of epochs; dropouts stay at 0.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    second = Axis("numepochs", NUM_EPOCHS) if model_kind == "RNN" else Axis("batch_size", BATCH_SIZES)
    return ParamSpace((Axis("learning_rate", LEARNING_RATES), second, Axis("hidden_dim", HIDDEN_NODES)), model_kind)


def default_lr_grid(n_points: int = 208, low: float = 0.005, high: float = 0.823) -> list[float]:
    """Evenly spaced learning rates for the sweep, endpoints included."""
    if n_points < 1:
        raise ValueError("empty learning-rate grid")
    if n_points == 1:
        return [low]
    return [float(v) for v in np.linspace(low, high, n_points)]


@dataclass(frozen=True)
class LrCurve:
    learning_rates: tuple[float, ...]
    mean_accuracy: tuple[float, ...]
    samples: tuple[tuple[float, ...], ...]

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.learning_rates, self.mean_accuracy))


def lr_sweep(
    evaluate: Callable[[float], float | Sequence[float]],
    learning_rates: Iterable[float] | None = None,
    map_fn=map,
) -> LrCurve:
    """One evaluation per learning rate; ``evaluate`` returns one accuracy or
    a sample of them (e.g. one per cross-validation plan), averaged per point."""
    lrs = list(default_lr_grid() if learning_rates is None else learning_rates)
    if not lrs:
        raise ValueError("empty learning-rate grid")
    samples = []
    for out in map_fn(evaluate, lrs):
        sample = (float(out),) if np.isscalar(out) else tuple(float(v) for v in out)
        if not sample:
            raise ValueError("evaluate returned no accuracies")
        samples.append(sample)
    means = tuple(float(np.mean(s)) for s in samples)
    return LrCurve(tuple(float(v) for v in lrs), means, tuple(samples))


@dataclass(frozen=True)
class BudgetEstimate:
    evaluations: int
    # V/n: predictions per iteration (grid reading) or parameter volume per
    # iteration (random reading); both scale cost the same way
    volume_per_iteration: float
    relative_cost: float


def budget_estimate(space: ParamSpace, budget: Budget, strategy: str) -> BudgetEstimate:
    """Predicted evaluation count: prod(c_i) for grid, the trial budget otherwise."""
    if strategy == "grid":
        evaluations = space.grid_size
    elif strategy in ("random", "nelder_mead"):
        evaluations = budget.max_trials
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    scale = budget.volume / budget.iterations
    return BudgetEstimate(evaluations, scale, scale * evaluations)
