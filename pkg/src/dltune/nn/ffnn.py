"""Fully connected feed-forward classifier trained by mini-batch SGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dltune.nn.common import (
    ACTIVATIONS,
    TrainConfig,
    TrainingError,
    check_finite,
    cross_entropy,
    dropout_mask,
    encode_labels,
    glorot_uniform,
    minibatches,
    quiet_overflow,
    softmax,
)


@dataclass(frozen=True)
class FeedForwardModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str
    classes: np.ndarray
    output: str = "softmax"

    def __post_init__(self):
        weights = tuple(np.array(w, dtype=float) for w in self.weights)
        biases = tuple(np.array(b, dtype=float) for b in self.biases)
        if not weights or len(weights) != len(biases):
            raise TrainingError("need one bias vector per weight matrix")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise TrainingError(f"layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if k and weights[k - 1].shape[1] != w.shape[0]:
                raise TrainingError(f"layer {k} input {w.shape[0]} != previous output {weights[k - 1].shape[1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise TrainingError(f"layer {k} has non-finite parameters")
            w.flags.writeable = False
            b.flags.writeable = False
        classes = np.asarray(self.classes)
        if len(classes) != weights[-1].shape[1]:
            raise TrainingError(f"{len(classes)} classes for {weights[-1].shape[1]} outputs")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "classes", classes)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> list[int]:
        return [self.n_inputs] + [w.shape[1] for w in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params) -> FeedForwardModel:
        return FeedForwardModel(tuple(params[0::2]), tuple(params[1::2]), self.activation, self.classes, self.output)


def init_ffnn(n_inputs: int, hidden_dims, classes, activation: str, rng: np.random.Generator) -> FeedForwardModel:
    dims = [n_inputs, *hidden_dims, len(classes)]
    weights = tuple(glorot_uniform(rng, a, b) for a, b in zip(dims[:-1], dims[1:]))
    biases = tuple(np.zeros(b) for b in dims[1:])
    return FeedForwardModel(weights, biases, activation, np.asarray(classes))


def _forward(params, activation, X, masks=None):
    """Returns (probs, inputs per layer, pre-activations, raw hidden activations)."""
    f = ACTIVATIONS[activation][0]
    n_layers = len(params) // 2
    a = X if masks is None or masks[0] is None else X * masks[0]
    inputs, pre, raw = [a], [], []
    for k in range(n_layers):
        z = a @ params[2 * k] + params[2 * k + 1]
        pre.append(z)
        if k == n_layers - 1:
            return softmax(z), inputs, pre, raw
        h = f(z)
        raw.append(h)
        a = h if masks is None or masks[k + 1] is None else h * masks[k + 1]
        inputs.append(a)


def loss_and_grads(params, activation: str, X: np.ndarray, targets: np.ndarray, masks=None):
    """Mean softmax cross-entropy and its gradient w.r.t. ``params``.

    ``params`` is the flat ``[W0, b0, W1, b1, ...]`` list; ``masks`` holds the
    input mask followed by one mask per hidden layer (None entries = no dropout).
    """
    dfdz = ACTIVATIONS[activation][1]
    probs, inputs, pre, raw = _forward(params, activation, X, masks)
    n = len(targets)
    loss = cross_entropy(probs, targets)
    delta = probs.copy()
    delta[np.arange(n), targets] -= 1.0
    delta /= n
    grads = [None] * len(params)
    for k in range(len(params) // 2 - 1, -1, -1):
        grads[2 * k] = inputs[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k == 0:
            break
        da = delta @ params[2 * k].T
        if masks is not None and masks[k] is not None:
            da = da * masks[k]
        delta = da * dfdz(pre[k - 1], raw[k - 1])
    return loss, grads


@quiet_overflow
def ffnn_fit(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    classes=None,
    init: FeedForwardModel | None = None,
) -> tuple[FeedForwardModel, list[float]]:
    """SGD over shuffled mini-batches; returns the model and per-epoch mean loss.

    ``init`` lets pretrained stacks reuse this loop for fine-tuning. Raises
    :class:`DivergenceError` if an epoch loss is non-finite.
    """
    X = np.asarray(X, dtype=float)
    if classes is None:
        targets, classes = encode_labels(y)
    else:
        classes = np.asarray(classes)
        targets = np.searchsorted(classes, y)
        if np.any(targets >= len(classes)) or np.any(classes[np.minimum(targets, len(classes) - 1)] != y):
            raise TrainingError("training labels not among the given classes")
    n = len(X)
    if n == 0:
        raise TrainingError("empty training set")
    if config.batch_size > n:
        raise TrainingError(f"batch_size {config.batch_size} exceeds training size {n}")

    rng = np.random.default_rng(config.seed)
    model = init if init is not None else init_ffnn(X.shape[1], config.hidden_dims, classes, config.activation, rng)
    if model.n_inputs != X.shape[1]:
        raise TrainingError(f"model expects {model.n_inputs} features, data has {X.shape[1]}")
    params = [p.copy() for p in model.params]
    hidden_sizes = model.layer_dims[1:-1]
    criterion = config.criterion
    trace: list[float] = []
    while True:
        epoch = len(trace) + 1
        total = 0.0
        for batch in minibatches(rng, n, config.batch_size):
            masks = None
            if config.visible_dropout > 0 or config.hidden_dropout > 0:
                masks = [dropout_mask(rng, (len(batch), X.shape[1]), config.visible_dropout)]
                masks += [dropout_mask(rng, (len(batch), h), config.hidden_dropout) for h in hidden_sizes]
            loss, grads = loss_and_grads(params, model.activation, X[batch], targets[batch], masks)
            check_finite(loss, epoch)
            total += loss * len(batch)
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
        mean_loss = total / n
        check_finite(mean_loss, epoch)
        if not all(np.all(np.isfinite(p)) for p in params):
            check_finite(float("nan"), epoch)
        trace.append(mean_loss)
        if criterion.should_stop(trace):
            break
    return model.with_params(params), trace


def ffnn_train(data, plan, config: TrainConfig) -> tuple[FeedForwardModel, list[float]]:
    """Train on ``plan.train`` rows of a :class:`DataTable`."""
    config.check_applicable("FFNN")
    train = list(plan.train)
    classes = np.unique(data.labels)
    if len(classes) < 2:
        classes = encode_labels(data.labels)[1]
    return ffnn_fit(data.features[train], data.labels[train], config, classes=classes)


def ffnn_predict(model: FeedForwardModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Predicted labels and per-class softmax scores (no dropout)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise TrainingError(f"model expects {model.n_inputs} features, got {X.shape[1]}")
    probs = _forward(model.params, model.activation, X)[0]
    return model.classes[np.argmax(probs, axis=1)], probs
