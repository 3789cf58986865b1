"""Training configuration, activations and helpers shared by every model family."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

MODEL_KINDS = ("FFNN", "RNN", "SAE", "DBN")

# which dropout knobs each family exposes
DROPOUT_APPLICABILITY = {
    "FFNN": {"hidden_dropout"},
    "RNN": set(),
    "SAE": {"hidden_dropout", "visible_dropout"},
    "DBN": {"hidden_dropout", "visible_dropout"},
}


class TrainingError(ValueError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True)
class StoppingCriterion:
    """When to suspend training: after ``max_epochs``, or once the epoch loss
    has failed to improve by ``min_loss_delta`` for ``patience`` epochs
    (``patience=0`` disables the plateau rule)."""

    max_epochs: int
    min_loss_delta: float = 0.0
    patience: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise TrainingError("max_epochs must be >= 1")
        if self.patience < 0:
            raise TrainingError("patience must be >= 0")

    def should_stop(self, trace: list[float]) -> bool:
        if len(trace) >= self.max_epochs:
            return True
        if self.patience == 0 or len(trace) <= self.patience:
            return False
        best_before = min(trace[: -self.patience])
        return min(trace[-self.patience:]) > best_before - self.min_loss_delta


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    batch_size: int = 10
    epochs: int = 10
    hidden_dims: tuple[int, ...] = (5,)
    hidden_dropout: float = 0.0
    visible_dropout: float = 0.0
    activation: str = "sigmoid"
    seed: int = 0
    stopping: StoppingCriterion | None = None
    # greedy pretraining epochs per level for SAE/DBN; None = epochs
    pretrain_epochs: int | None = None
    pretrain_learning_rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if not self.learning_rate > 0 or not math.isfinite(self.learning_rate):
            raise TrainingError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise TrainingError(f"batch_size must be positive, got {self.batch_size}")
        if self.epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {self.epochs}")
        if not self.hidden_dims or min(self.hidden_dims) < 1:
            raise TrainingError(f"hidden_dims must be non-empty positive, got {self.hidden_dims}")
        for name in ("hidden_dropout", "visible_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise TrainingError(f"{name} must lie in [0, 1), got {p}")
        if self.activation not in ACTIVATIONS:
            raise TrainingError(f"unknown activation {self.activation!r}")
        if self.pretrain_epochs is not None and self.pretrain_epochs < 0:
            raise TrainingError("pretrain_epochs must be >= 0")

    @property
    def criterion(self) -> StoppingCriterion:
        if self.stopping is None:
            return StoppingCriterion(self.epochs)
        return StoppingCriterion(min(self.epochs, self.stopping.max_epochs),
                                 self.stopping.min_loss_delta, self.stopping.patience)

    def check_applicable(self, model_kind: str) -> None:
        """Reject dropout settings the model family does not expose."""
        if model_kind not in DROPOUT_APPLICABILITY:
            raise TrainingError(f"unknown model kind {model_kind!r}")
        allowed = DROPOUT_APPLICABILITY[model_kind]
        for name in ("hidden_dropout", "visible_dropout"):
            if getattr(self, name) > 0 and name not in allowed:
                raise TrainingError(f"{name} is not available for {model_kind}")


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# name -> (f(z), f'(z) expressed through z and a = f(z))
ACTIVATIONS = {
    "sigmoid": (_sigmoid, lambda z, a: a * (1.0 - a)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(z.dtype)),
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
}


def sigmoid(z):
    return _sigmoid(np.asarray(z, dtype=float))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-likelihood of integer ``targets``."""
    picked = probs[np.arange(len(targets)), targets]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out))


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray | None:
    """Inverted-dropout mask (kept units scaled by 1/(1-rate)); None when off."""
    if rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def minibatches(rng: np.random.Generator, n: int, batch_size: int):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def encode_labels(y) -> tuple[np.ndarray, np.ndarray]:
    """Map arbitrary label values to 0..K-1; returns (codes, classes)."""
    y = np.asarray(y)
    classes, codes = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        # keep a K >= 2 softmax even for single-class training data
        classes = np.append(classes, classes[0] + 1 if np.issubdtype(classes.dtype, np.number) else "__other__")
    return codes.astype(int), classes


def quiet_overflow(fn):
    """Divergence is detected from non-finite losses, so numpy's overflow
    warnings along the way are noise."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)

    return wrapper


def check_finite(loss: float, epoch: int) -> None:
    if not math.isfinite(loss):
        raise DivergenceError(epoch, loss)
