"""Stacked autoencoder with greedy layerwise (optionally denoising) pretraining."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from dltune.nn.common import (
    ACTIVATIONS,
    TrainConfig,
    TrainingError,
    check_finite,
    dropout_mask,
    encode_labels,
    glorot_uniform,
    minibatches,
    quiet_overflow,
)
from dltune.nn.ffnn import FeedForwardModel, ffnn_fit, ffnn_predict


@dataclass(frozen=True)
class AutoencoderLevel:
    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray

    def __post_init__(self):
        arrays = [np.array(a, dtype=float) for a in (self.w_enc, self.b_enc, self.w_dec, self.b_dec)]
        w_enc, b_enc, w_dec, b_dec = arrays
        d_in, d_code = w_enc.shape
        if b_enc.shape != (d_code,) or w_dec.shape != (d_code, d_in) or b_dec.shape != (d_in,):
            raise TrainingError("decoder shape does not invert encoder shape")
        for name, a in zip(("w_enc", "b_enc", "w_dec", "b_dec"), arrays):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def input_dim(self) -> int:
        return self.w_enc.shape[0]

    @property
    def code_dim(self) -> int:
        return self.w_enc.shape[1]


@dataclass(frozen=True)
class AutoencoderStack:
    levels: tuple[AutoencoderLevel, ...]
    activation: str
    head: tuple[np.ndarray, np.ndarray] | None = None
    classes: np.ndarray | None = None
    traces: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if not self.levels:
            raise TrainingError("an autoencoder stack needs at least one level")
        for k in range(1, len(self.levels)):
            if self.levels[k].input_dim != self.levels[k - 1].code_dim:
                raise TrainingError(f"level {k} input dim != level {k - 1} code dim")
        if self.head is not None and self.head[0].shape[0] != self.levels[-1].code_dim:
            raise TrainingError("classifier head does not match the deepest code")

    @property
    def dims(self) -> list[int]:
        return [self.levels[0].input_dim] + [lv.code_dim for lv in self.levels]

    def encode(self, X) -> np.ndarray:
        f = ACTIVATIONS[self.activation][0]
        a = np.asarray(X, dtype=float)
        for lv in self.levels:
            a = f(a @ lv.w_enc + lv.b_enc)
        return a

    def reconstruct(self, X) -> np.ndarray:
        f = ACTIVATIONS[self.activation][0]
        a = self.encode(X)
        for k in range(len(self.levels) - 1, -1, -1):
            lv = self.levels[k]
            a = a @ lv.w_dec + lv.b_dec
            if k > 0:
                # intermediate reconstructions are codes, so map them back into code range
                a = f(a)
        return a

    def to_network(self) -> FeedForwardModel:
        if self.head is None:
            raise TrainingError("stack has no classifier head; run sae_finetune_classify")
        weights = tuple(lv.w_enc for lv in self.levels) + (self.head[0],)
        biases = tuple(lv.b_enc for lv in self.levels) + (self.head[1],)
        return FeedForwardModel(weights, biases, self.activation, self.classes)


def reconstruction_mse(stack: AutoencoderStack, X) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.mean((stack.reconstruct(X) - X) ** 2))


@quiet_overflow
def _train_level(A, code_dim, config: TrainConfig, rng, epochs, lr):
    f, dfdz = ACTIVATIONS[config.activation]
    n, d_in = A.shape
    w_enc = glorot_uniform(rng, d_in, code_dim)
    b_enc = np.zeros(code_dim)
    w_dec = glorot_uniform(rng, code_dim, d_in)
    b_dec = np.zeros(d_in)
    trace = []
    for epoch in range(1, epochs + 1):
        total = 0.0
        for batch in minibatches(rng, n, min(config.batch_size, n)):
            clean = A[batch]
            m_in = dropout_mask(rng, clean.shape, config.visible_dropout)
            noisy = clean if m_in is None else clean * m_in
            z = noisy @ w_enc + b_enc
            code = f(z)
            m_code = dropout_mask(rng, code.shape, config.hidden_dropout)
            used = code if m_code is None else code * m_code
            recon = used @ w_dec + b_dec
            err = recon - clean
            loss = float(np.mean(err ** 2))
            check_finite(loss, epoch)
            total += loss * len(batch)
            d_recon = 2.0 * err / err.size
            g_wdec = used.T @ d_recon
            g_bdec = d_recon.sum(axis=0)
            d_code = d_recon @ w_dec.T
            if m_code is not None:
                d_code = d_code * m_code
            dz = d_code * dfdz(z, code)
            w_enc -= lr * (noisy.T @ dz)
            b_enc -= lr * dz.sum(axis=0)
            w_dec -= lr * g_wdec
            b_dec -= lr * g_bdec
        trace.append(total / n)
    return AutoencoderLevel(w_enc, b_enc, w_dec, b_dec), trace


def sae_pretrain(X, config: TrainConfig, strict_compression: bool = False) -> AutoencoderStack:
    """Greedy layerwise pretraining, one autoencoder per entry of ``hidden_dims``.

    Level ``k`` learns to reconstruct the (clean) codes of level ``k-1`` under
    mean squared error. ``visible_dropout`` corrupts each level's input and
    ``hidden_dropout`` its code. ``config.pretrain_epochs = 0`` returns the
    initialized, untrained stack.
    """
    config.check_applicable("SAE")
    A = np.asarray(X, dtype=float)
    if A.ndim != 2 or len(A) == 0:
        raise TrainingError("need a non-empty 2-D input matrix")
    epochs = config.epochs if config.pretrain_epochs is None else config.pretrain_epochs
    lr = config.pretrain_learning_rate or config.learning_rate
    f = ACTIVATIONS[config.activation][0]
    rng = np.random.default_rng(config.seed)
    levels, traces = [], []
    for code_dim in config.hidden_dims:
        if strict_compression and code_dim >= A.shape[1]:
            raise TrainingError(f"code dim {code_dim} does not compress input dim {A.shape[1]}")
        level, trace = _train_level(A, code_dim, config, rng, epochs, lr)
        levels.append(level)
        traces.append(tuple(trace))
        A = f(A @ level.w_enc + level.b_enc)
    return AutoencoderStack(tuple(levels), config.activation, traces=tuple(traces))


def _with_head(stack: AutoencoderStack, classes, seed: int) -> FeedForwardModel:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    head_w = glorot_uniform(rng, stack.levels[-1].code_dim, len(classes))
    head = (head_w, np.zeros(len(classes)))
    return replace(stack, head=head, classes=np.asarray(classes)).to_network()


def sae_finetune_classify(stack: AutoencoderStack, data, plan, config: TrainConfig):
    """Add a softmax head on the deepest code and fine-tune the whole stack.

    Returns the stack (encoders updated, head set) and the fine-tuning loss
    trace; ``stack.to_network()`` gives the classifier.
    """
    config.check_applicable("SAE")
    classes = np.unique(data.labels)
    if len(classes) < 2:
        classes = encode_labels(data.labels)[1]
    train = list(plan.train)
    init = _with_head(stack, classes, config.seed)
    net, trace = ffnn_fit(data.features[train], data.labels[train], config, classes=classes, init=init)
    levels = tuple(
        replace(lv, w_enc=w, b_enc=b) for lv, w, b in zip(stack.levels, net.weights[:-1], net.biases[:-1])
    )
    tuned = replace(stack, levels=levels, head=(net.weights[-1], net.biases[-1]), classes=net.classes)
    return tuned, trace


def sae_predict(stack: AutoencoderStack, X):
    return ffnn_predict(stack.to_network(), X)
