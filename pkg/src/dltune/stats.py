"""Rank statistics and aggregation tables for trial results."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class GroupSample:
    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError(f"group {self.label!r} is empty")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"group {self.label!r} has non-finite values")
        object.__setattr__(self, "values", values)


class KruskalResult(NamedTuple):
    statistic: float
    df: int
    p_value: float

    @property
    def reject(self) -> bool:
        """True when the equal-distribution hypothesis is rejected at 0.05."""
        return self.p_value < 0.05


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x), convergent for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz continued fraction, for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cfrac(a, x)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    return regularized_gamma_q(df / 2.0, x / 2.0)


def kruskal_wallis(groups: Sequence[GroupSample | Sequence[float]], tie_correction: bool = True) -> KruskalResult:
    """Kruskal-Wallis H over pooled midranks, chi-square p-value with groups-1 df.

    If every observation is identical H is undefined; it is reported as 0
    with p = 1.
    """
    samples = [g.values if isinstance(g, GroupSample) else GroupSample(str(i), g).values for i, g in enumerate(groups)]
    if len(samples) < 2:
        raise ValueError("Kruskal-Wallis needs at least two groups")
    pooled = np.concatenate([np.asarray(s) for s in samples])
    n = len(pooled)
    df = len(samples) - 1
    if np.all(pooled == pooled[0]):
        return KruskalResult(0.0, df, 1.0)
    ranks = midranks(pooled)
    h = 0.0
    start = 0
    for s in samples:
        r = ranks[start:start + len(s)].sum()
        h += r * r / len(s)
        start += len(s)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    if tie_correction:
        _, counts = np.unique(pooled, return_counts=True)
        h /= 1.0 - float(np.sum(counts ** 3 - counts)) / (n ** 3 - n)
    h = float(max(h, 0.0))
    return KruskalResult(h, df, float(chi2_sf(h, df)))


@dataclass(frozen=True)
class BoxSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float


def quantile(sorted_values: Sequence[float], p: float) -> float:
    """Linear interpolation between order statistics (Hyndman-Fan type 7)."""
    h = (len(sorted_values) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    return float(sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo]))


def box_summary(values: Iterable[float]) -> BoxSummary:
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError("box summary of an empty sample")
    return BoxSummary(xs[0], quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75), xs[-1], math.fsum(xs) / len(xs))


class MeanRow(NamedTuple):
    key: tuple
    mean: float
    std: float
    count: int


def sort_key(value):
    """Orders numbers numerically and before strings, so mixed keys sort stably."""
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def mean_accuracy(trials: Sequence[Mapping], keys: Sequence[str], metric: str = "test_accuracy") -> list[MeanRow]:
    """Mean, sample standard deviation and count of ``metric`` per key group."""
    if not trials:
        raise ValueError("no trials to aggregate")
    for k in list(keys) + [metric]:
        if k not in trials[0]:
            raise KeyError(f"unknown field {k!r}")
    groups: dict[tuple, list[float]] = defaultdict(list)
    for t in trials:
        groups[tuple(t[k] for k in keys)].append(float(t[metric]))
    rows = []
    for key in sorted(groups, key=lambda k: tuple(sort_key(v) for v in k)):
        vals = groups[key]
        mean = math.fsum(vals) / len(vals)
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
        rows.append(MeanRow(key, mean, std, len(vals)))
    return rows


STRATEGY_ORDER = ("baseline", "grid", "random", "nelder_mead", "lr_sweep")
STRATEGY_LABEL = {
    "grid": "grid search",
    "random": "random search",
    "nelder_mead": "nelder-mead search",
    "lr_sweep": "learning-rate sweep",
}


def method_name(model: str, strategy: str) -> str:
    if strategy == "baseline":
        return model
    return f"{model}-{STRATEGY_LABEL.get(strategy, strategy)}"


def timing_table(trials: Sequence[Mapping]) -> list[tuple[str, float]]:
    """Mean (over datasets) of the total wall time of each search run.

    One row per (model, strategy) with data; a ``baseline`` strategy is a
    single training run and is labelled by the model name alone.
    """
    totals: dict[tuple, float] = defaultdict(float)
    for t in trials:
        totals[(t["model"], t["strategy"], t["dataset"])] += float(t["wall_time"])
    per_method: dict[tuple, list[float]] = defaultdict(list)
    for (model, strategy, _), total in totals.items():
        per_method[(model, strategy)].append(total)

    def order(key):
        model, strategy = key
        rank = STRATEGY_ORDER.index(strategy) if strategy in STRATEGY_ORDER else len(STRATEGY_ORDER)
        return (model, rank, strategy)

    return [(method_name(*key), math.fsum(v) / len(v)) for key, v in sorted(per_method.items(), key=lambda kv: order(kv[0]))]


def ranking_table(per_dataset: Mapping[str, float]) -> list[tuple[str, float]]:
    """Datasets by descending accuracy, ties broken alphabetically."""
    return sorted(((name, float(acc)) for name, acc in per_dataset.items()), key=lambda r: (-r[1], r[0]))
