"""Elman-style recurrent classifier: c_s = tanh(w_nn p_s + w_in i_s), y = w_o c_s.

Weights follow the column-vector convention of the recurrence: ``w_in`` is
(hidden, input), ``w_nn`` is (hidden, hidden) and ``w_o`` is (output, hidden).
Batched code carries states as rows, so it multiplies by the transposes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dltune.nn.common import (
    TrainConfig,
    TrainingError,
    check_finite,
    encode_labels,
    glorot_uniform,
    minibatches,
    quiet_overflow,
    softmax,
)


@dataclass(frozen=True)
class RecurrentModel:
    w_in: np.ndarray
    w_nn: np.ndarray
    w_o: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        w_in, w_nn, w_o = (np.array(w, dtype=float) for w in (self.w_in, self.w_nn, self.w_o))
        if w_in.ndim != 2 or w_nn.ndim != 2 or w_o.ndim != 2:
            raise TrainingError("recurrent weights must be matrices")
        h = w_in.shape[0]
        if w_nn.shape != (h, h):
            raise TrainingError(f"w_nn must be {h}x{h}, got {w_nn.shape}")
        if w_o.shape[1] != h:
            raise TrainingError(f"w_o must have {h} columns, got {w_o.shape}")
        classes = np.asarray(self.classes)
        if len(classes) != w_o.shape[0]:
            raise TrainingError(f"{len(classes)} classes for {w_o.shape[0]} outputs")
        for name, w in (("w_in", w_in), ("w_nn", w_nn), ("w_o", w_o)):
            if not np.all(np.isfinite(w)):
                raise TrainingError(f"{name} has non-finite entries")
            w.flags.writeable = False
            object.__setattr__(self, name, w)
        object.__setattr__(self, "classes", classes)

    @property
    def hidden_dim(self) -> int:
        return self.w_nn.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]

    @property
    def params(self) -> list[np.ndarray]:
        return [self.w_in, self.w_nn, self.w_o]

    def with_params(self, params) -> RecurrentModel:
        return RecurrentModel(*params, classes=self.classes)


def rnn_step(model: RecurrentModel, p_s, i_s) -> np.ndarray:
    """Next hidden state from the previous state ``p_s`` and input ``i_s``."""
    p_s, i_s = np.asarray(p_s, dtype=float), np.asarray(i_s, dtype=float)
    if p_s.shape[-1] != model.hidden_dim:
        raise TrainingError(f"state has width {p_s.shape[-1]}, model hidden_dim is {model.hidden_dim}")
    if i_s.shape[-1] != model.input_dim:
        raise TrainingError(f"input has width {i_s.shape[-1]}, model expects {model.input_dim}")
    return np.tanh(p_s @ model.w_nn.T + i_s @ model.w_in.T)


def rnn_output(model: RecurrentModel, c_s) -> np.ndarray:
    c_s = np.asarray(c_s, dtype=float)
    if c_s.shape[-1] != model.hidden_dim:
        raise TrainingError(f"state has width {c_s.shape[-1]}, model hidden_dim is {model.hidden_dim}")
    return c_s @ model.w_o.T


def _states(w_in, w_nn, X):
    n, steps, _ = X.shape
    h = np.zeros((steps + 1, n, w_nn.shape[0]))
    for t in range(steps):
        h[t + 1] = np.tanh(h[t] @ w_nn.T + X[:, t] @ w_in.T)
    return h


def loss_and_grads(params, X: np.ndarray, targets: np.ndarray, truncate: int | None = None):
    """Cross-entropy and BPTT gradients for ``params = [w_in, w_nn, w_o]``.

    ``targets`` of shape (N,) scores only the final state; shape (N, T) scores
    every step (mean over all N*T predictions). ``truncate`` limits how many
    steps each loss term is propagated back through.
    """
    w_in, w_nn, w_o = params
    n, steps, _ = X.shape
    h = _states(w_in, w_nn, X)
    per_step = targets.ndim == 2
    scored = range(1, steps + 1) if per_step else [steps]
    count = n * len(scored)

    loss = 0.0
    d_out = {}
    g_o = np.zeros_like(w_o)
    for t in scored:
        y_t = targets[:, t - 1] if per_step else targets
        probs = softmax(h[t] @ w_o.T)
        loss += -np.sum(np.log(np.maximum(probs[np.arange(n), y_t], 1e-300)))
        dy = probs
        dy[np.arange(n), y_t] -= 1.0
        dy /= count
        g_o += dy.T @ h[t]
        d_out[t] = dy @ w_o
    loss /= count

    g_in = np.zeros_like(w_in)
    g_nn = np.zeros_like(w_nn)

    def backprop(start: int, dh: np.ndarray, stop: int) -> None:
        nonlocal g_in, g_nn
        for t in range(start, stop, -1):
            dz = dh * (1.0 - h[t] ** 2)
            g_in += dz.T @ X[:, t - 1]
            g_nn += dz.T @ h[t - 1]
            dh = dz @ w_nn

    if truncate is None or truncate >= steps:
        dh = np.zeros((n, w_nn.shape[0]))
        for t in range(steps, 0, -1):
            if t in d_out:
                dh = dh + d_out[t]
            dz = dh * (1.0 - h[t] ** 2)
            g_in += dz.T @ X[:, t - 1]
            g_nn += dz.T @ h[t - 1]
            dh = dz @ w_nn
    else:
        if truncate < 1:
            raise TrainingError("truncation horizon must be >= 1")
        for t, dh in d_out.items():
            backprop(t, dh, max(t - truncate, 0))
    return float(loss), [g_in, g_nn, g_o]


def init_rnn(input_dim: int, hidden_dim: int, classes, rng: np.random.Generator) -> RecurrentModel:
    return RecurrentModel(
        glorot_uniform(rng, input_dim, hidden_dim).T,
        glorot_uniform(rng, hidden_dim, hidden_dim),
        glorot_uniform(rng, hidden_dim, len(classes)).T,
        np.asarray(classes),
    )


def as_sequences(X) -> np.ndarray:
    """Tabular rows as length-NF sequences of scalar inputs."""
    X = np.asarray(X, dtype=float)
    return X[:, :, None] if X.ndim == 2 else X


@quiet_overflow
def rnn_train(sequences, targets, config: TrainConfig, classes=None, truncate: int | None = None):
    """Fit a single-layer RNN; returns (model, per-epoch mean loss).

    ``sequences`` is (N, T, D), or (N, T) for scalar inputs. ``targets`` is
    (N,) for sequence classification or (N, T) for per-step prediction.
    """
    config.check_applicable("RNN")
    X = as_sequences(sequences)
    if X.ndim != 3 or X.shape[0] == 0 or X.shape[1] == 0:
        raise TrainingError(f"need non-empty (N, T, D) sequences, got shape {X.shape}")
    if len(config.hidden_dims) != 1:
        raise TrainingError("RNN takes a single hidden dimension")
    if truncate is not None and not 1 <= truncate <= X.shape[1]:
        raise TrainingError(f"truncation horizon {truncate} outside 1..{X.shape[1]}")
    raw = np.asarray(targets)
    if raw.shape[0] != X.shape[0] or raw.ndim not in (1, 2) or (raw.ndim == 2 and raw.shape[1] != X.shape[1]):
        raise TrainingError(f"targets of shape {raw.shape} do not match sequences {X.shape[:2]}")
    if classes is None:
        codes, classes = encode_labels(raw.ravel())
    else:
        classes = np.asarray(classes)
        codes = np.searchsorted(classes, raw.ravel())
    codes = codes.reshape(raw.shape)
    n = X.shape[0]
    if config.batch_size > n:
        raise TrainingError(f"batch_size {config.batch_size} exceeds training size {n}")

    rng = np.random.default_rng(config.seed)
    model = init_rnn(X.shape[2], config.hidden_dims[0], classes, rng)
    params = [p.copy() for p in model.params]
    criterion = config.criterion
    trace: list[float] = []
    while True:
        epoch = len(trace) + 1
        total = 0.0
        for batch in minibatches(rng, n, config.batch_size):
            loss, grads = loss_and_grads(params, X[batch], codes[batch], truncate)
            check_finite(loss, epoch)
            total += loss * len(batch)
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
        if not all(np.all(np.isfinite(p)) for p in params):
            check_finite(float("nan"), epoch)
        trace.append(total / n)
        if criterion.should_stop(trace):
            break
    return model.with_params(params), trace


def rnn_train_table(data, plan, config: TrainConfig):
    """Train on ``plan.train`` rows, one feature per time step."""
    train = list(plan.train)
    classes = np.unique(data.labels)
    if len(classes) < 2:
        classes = encode_labels(data.labels)[1]
    return rnn_train(data.features[train], data.labels[train], config, classes=classes)


def rnn_predict(model: RecurrentModel, sequences, per_step: bool = False):
    """Labels and softmax scores from the last state (or every state)."""
    X = as_sequences(sequences)
    if X.shape[2] != model.input_dim:
        raise TrainingError(f"model expects input width {model.input_dim}, got {X.shape[2]}")
    h = _states(model.w_in, model.w_nn, X)
    if per_step:
        probs = softmax(h[1:] @ model.w_o.T).transpose(1, 0, 2)
    else:
        probs = softmax(h[-1] @ model.w_o.T)
    return model.classes[np.argmax(probs, axis=-1)], probs
