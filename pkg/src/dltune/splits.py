"""Seeded train/validation/test partitions of instance indices."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    scheme: str
    repeat: int | None = None
    fold: int | None = None

    def __post_init__(self):
        for part in ("train", "validation", "test"):
            object.__setattr__(self, part, tuple(int(i) for i in getattr(self, part)))
        seen = set(self.train)
        for part in (self.validation, self.test):
            if seen.intersection(part):
                raise ValueError("split parts overlap")
            seen.update(part)

    @property
    def size(self) -> int:
        return len(self.train) + len(self.validation) + len(self.test)

    def take(self, indices) -> SplitPlan:
        """Re-express a plan over ``range(len(indices))`` in terms of ``indices``."""
        indices = np.asarray(indices)
        return SplitPlan(
            tuple(indices[list(self.train)]),
            tuple(indices[list(self.validation)]),
            tuple(indices[list(self.test)]),
            self.seed,
            self.scheme,
            self.repeat,
            self.fold,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "scheme": self.scheme,
                "seed": self.seed,
                "repeat": self.repeat,
                "fold": self.fold,
                "train": list(self.train),
                "validation": list(self.validation),
                "test": list(self.test),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> SplitPlan:
        d = json.loads(text)
        return cls(d["train"], d["validation"], d["test"], d["seed"], d["scheme"], d.get("repeat"), d.get("fold"))


def _perm(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def holdout(n: int, seed: int) -> SplitPlan:
    """70/30 train/test split."""
    if n < 2:
        raise ValueError(f"holdout needs n >= 2, got {n}")
    idx = _perm(n, seed)
    cut = n * 7 // 10
    return SplitPlan(tuple(idx[:cut]), (), tuple(idx[cut:]), seed, "holdout_70_30")


def three_way(n: int, seed: int) -> SplitPlan:
    """70/15/15 train/validation/test split; validation takes an odd remainder."""
    if n < 3:
        raise ValueError(f"three_way needs n >= 3, got {n}")
    idx = _perm(n, seed)
    cut = n * 7 // 10
    rest = n - cut
    n_val = rest - rest // 2
    return SplitPlan(
        tuple(idx[:cut]), tuple(idx[cut:cut + n_val]), tuple(idx[cut + n_val:]), seed, "three_way_70_15_15"
    )


def _fold_sizes(n: int, folds: int) -> list[int]:
    base, extra = divmod(n, folds)
    return [base + (1 if k < extra else 0) for k in range(folds)]


def repeated_cv(n: int, folds: int = 10, repeats: int = 10, seed: int = 0, stratify=None) -> list[SplitPlan]:
    """``repeats`` independent shuffles, each cut into ``folds`` test folds.

    Plans come out repeat-major: plan ``r * folds + k`` tests fold ``k`` of
    repeat ``r``. With ``stratify`` (a label per instance) each class is dealt
    round-robin across folds instead of shuffled as one block.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"repeated_cv needs n >= folds, got n={n}, folds={folds}")
    if repeats < 1:
        raise ValueError("need at least one repeat")
    scheme = f"repeated_cv({folds},{repeats})"
    children = np.random.SeedSequence(seed).spawn(repeats)
    plans = []
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        if stratify is None:
            order = rng.permutation(n)
            bounds = np.cumsum([0] + _fold_sizes(n, folds))
            fold_members = [order[bounds[k]:bounds[k + 1]] for k in range(folds)]
        else:
            labels = np.asarray(stratify)
            if labels.shape != (n,):
                raise ValueError("stratify needs one label per instance")
            # dealt in one continuous round-robin so fold sizes still differ by <= 1
            dealt = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)])
            fold_members = [dealt[k::folds] for k in range(folds)]
        for k in range(folds):
            test = fold_members[k]
            train = np.concatenate([fold_members[m] for m in range(folds) if m != k])
            plans.append(SplitPlan(tuple(train), (), tuple(test), seed, scheme, r, k))
    return plans
