"""Deep belief network: greedily pretrained RBM stack with a softmax head."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from dltune.nn.common import (
    TrainConfig,
    TrainingError,
    check_finite,
    encode_labels,
    glorot_uniform,
    minibatches,
    quiet_overflow,
    sigmoid,
)
from dltune.nn.ffnn import FeedForwardModel, ffnn_fit, ffnn_predict


@dataclass(frozen=True)
class RBM:
    """Bernoulli-Bernoulli RBM; ``weights`` is (visible, hidden)."""

    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        w, vb, hb = (np.array(a, dtype=float) for a in (self.weights, self.visible_bias, self.hidden_bias))
        if w.ndim != 2 or vb.shape != (w.shape[0],) or hb.shape != (w.shape[1],):
            raise TrainingError(f"RBM shapes disagree: W {w.shape}, vb {vb.shape}, hb {hb.shape}")
        for name, a in (("weights", w), ("visible_bias", vb), ("hidden_bias", hb)):
            if not np.all(np.isfinite(a)):
                raise TrainingError(f"RBM {name} not finite")
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def n_visible(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]

    def hidden_probs(self, v) -> np.ndarray:
        return sigmoid(np.asarray(v, dtype=float) @ self.weights + self.hidden_bias)

    def visible_probs(self, h) -> np.ndarray:
        return sigmoid(np.asarray(h, dtype=float) @ self.weights.T + self.visible_bias)


def init_rbm(n_visible: int, n_hidden: int, rng: np.random.Generator) -> RBM:
    return RBM(glorot_uniform(rng, n_visible, n_hidden), np.zeros(n_visible), np.zeros(n_hidden))


def _check_unit_interval(v: np.ndarray, what: str) -> None:
    if v.size and (np.nanmin(v) < 0.0 or np.nanmax(v) > 1.0 or not np.all(np.isfinite(v))):
        raise TrainingError(f"{what} must lie in [0, 1] for Bernoulli units; scale the data first")


def rbm_cd1_update(rbm: RBM, batch, learning_rate: float, rng) -> tuple[RBM, float]:
    """One contrastive-divergence (CD-1) step on ``batch``.

    Hidden units are sampled once from the data-driven probabilities; the
    reconstruction uses visible probabilities. Returns the updated RBM and the
    mean squared reconstruction error of the batch. ``rng`` is a Generator or
    an integer seed.
    """
    v0 = np.atleast_2d(np.asarray(batch, dtype=float))
    _check_unit_interval(v0, "RBM input")
    if v0.shape[1] != rbm.n_visible:
        raise TrainingError(f"batch width {v0.shape[1]} != visible units {rbm.n_visible}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    h0 = rbm.hidden_probs(v0)
    h0_sample = (rng.random(h0.shape) < h0).astype(float)
    v1 = rbm.visible_probs(h0_sample)
    h1 = rbm.hidden_probs(v1)
    err = float(np.mean((v0 - v1) ** 2))
    if learning_rate == 0:
        return rbm, err
    size = len(v0)
    dw = learning_rate * (v0.T @ h0 - v1.T @ h1) / size
    dvb = learning_rate * (v0 - v1).mean(axis=0)
    dhb = learning_rate * (h0 - h1).mean(axis=0)
    return RBM(rbm.weights + dw, rbm.visible_bias + dvb, rbm.hidden_bias + dhb), err


@dataclass(frozen=True)
class RbmStack:
    """RBMs bottom-up; the top pair is the undirected associative memory.

    The classifier path reads the top hidden representation directly.
    """

    rbms: tuple[RBM, ...]
    head: tuple[np.ndarray, np.ndarray] | None = None
    classes: np.ndarray | None = None
    # per-layer epoch-mean reconstruction errors from pretraining
    traces: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if not self.rbms:
            raise TrainingError("a DBN needs at least one RBM")
        for k in range(1, len(self.rbms)):
            if self.rbms[k].n_visible != self.rbms[k - 1].n_hidden:
                raise TrainingError(f"RBM {k} visible dim != RBM {k - 1} hidden dim")
        if self.head is not None and self.head[0].shape[0] != self.rbms[-1].n_hidden:
            raise TrainingError("classifier head does not match the top hidden layer")

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [r.weights.shape for r in self.rbms]

    def propagate_up(self, X) -> np.ndarray:
        a = np.asarray(X, dtype=float)
        for r in self.rbms:
            a = r.hidden_probs(a)
        return a

    def to_network(self) -> FeedForwardModel:
        if self.head is None:
            raise TrainingError("stack has no classifier head; run dbn_classify")
        weights = tuple(r.weights for r in self.rbms) + (self.head[0],)
        biases = tuple(r.hidden_bias for r in self.rbms) + (self.head[1],)
        return FeedForwardModel(weights, biases, "sigmoid", self.classes)


@quiet_overflow
def dbn_pretrain(X, config: TrainConfig) -> RbmStack:
    """Train one RBM per ``hidden_dims`` entry bottom-up with CD-1.

    Each layer's hidden probabilities are the next layer's visible data.
    ``config.pretrain_epochs`` (default ``epochs``) may be 0 for an
    initialized, untrained stack.
    """
    config.check_applicable("DBN")
    data = np.asarray(X, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise TrainingError("need a non-empty 2-D input matrix")
    _check_unit_interval(data, "DBN input")
    epochs = config.epochs if config.pretrain_epochs is None else config.pretrain_epochs
    lr = config.pretrain_learning_rate or config.learning_rate
    rng = np.random.default_rng(config.seed)
    rbms, traces = [], []
    for n_hidden in config.hidden_dims:
        rbm = init_rbm(data.shape[1], n_hidden, rng)
        trace = []
        for epoch in range(1, epochs + 1):
            total = 0.0
            for batch in minibatches(rng, len(data), min(config.batch_size, len(data))):
                rbm, err = rbm_cd1_update(rbm, data[batch], lr, rng)
                total += err * len(batch)
            check_finite(total, epoch)
            trace.append(total / len(data))
        rbms.append(rbm)
        traces.append(tuple(trace))
        data = rbm.hidden_probs(data)
    return RbmStack(tuple(rbms), traces=tuple(traces))


def dbn_classify(stack: RbmStack, data, plan, config: TrainConfig):
    """Softmax head over the top hidden layer, then backprop through the stack.

    Returns the stack (weights fine-tuned, head set) and the loss trace.
    """
    config.check_applicable("DBN")
    classes = np.unique(data.labels)
    if len(classes) < 2:
        classes = encode_labels(data.labels)[1]
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    head = (glorot_uniform(rng, stack.rbms[-1].n_hidden, len(classes)), np.zeros(len(classes)))
    init = replace(stack, head=head, classes=classes).to_network()
    train = list(plan.train)
    net, trace = ffnn_fit(data.features[train], data.labels[train], config, classes=classes, init=init)
    rbms = tuple(
        RBM(w, r.visible_bias, b) for r, w, b in zip(stack.rbms, net.weights[:-1], net.biases[:-1])
    )
    return replace(stack, rbms=rbms, head=(net.weights[-1], net.biases[-1]), classes=net.classes), trace


def dbn_predict(stack: RbmStack, X):
    return ffnn_predict(stack.to_network(), X)
