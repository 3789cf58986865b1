"""JSON checkpoints: every tensor stored as {name, shape, row-major values}.

Layout::

    {"format": "dltune-checkpoint", "version": 1, "kind": "<class name>",
     "attrs": {...scalars and label lists...},
     "tensors": [{"name": "weights.0", "shape": [4, 5], "values": [...]}, ...]}

Floats are written with ``repr`` precision, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import os

import numpy as np

from dltune.nn.dbn import RBM, RbmStack
from dltune.nn.ffnn import FeedForwardModel
from dltune.nn.rnn import RecurrentModel
from dltune.nn.sae import AutoencoderLevel, AutoencoderStack

FORMAT = "dltune-checkpoint"


def _tensor(name, a):
    a = np.asarray(a, dtype=float)
    return {"name": name, "shape": list(a.shape), "values": a.ravel().tolist()}


def _labels(classes):
    return None if classes is None else np.asarray(classes).tolist()


def to_dict(model) -> dict:
    tensors = []
    attrs = {}
    if isinstance(model, FeedForwardModel):
        for k, (w, b) in enumerate(zip(model.weights, model.biases)):
            tensors += [_tensor(f"weights.{k}", w), _tensor(f"biases.{k}", b)]
        attrs = {"activation": model.activation, "output": model.output, "classes": _labels(model.classes)}
    elif isinstance(model, RecurrentModel):
        tensors = [_tensor("w_in", model.w_in), _tensor("w_nn", model.w_nn), _tensor("w_o", model.w_o)]
        attrs = {"classes": _labels(model.classes)}
    elif isinstance(model, AutoencoderStack):
        for k, lv in enumerate(model.levels):
            tensors += [_tensor(f"levels.{k}.{f}", getattr(lv, f)) for f in ("w_enc", "b_enc", "w_dec", "b_dec")]
        if model.head is not None:
            tensors += [_tensor("head.w", model.head[0]), _tensor("head.b", model.head[1])]
        attrs = {"activation": model.activation, "classes": _labels(model.classes), "n_levels": len(model.levels)}
    elif isinstance(model, RbmStack):
        for k, r in enumerate(model.rbms):
            tensors += [_tensor(f"rbms.{k}.{f}", getattr(r, f)) for f in ("weights", "visible_bias", "hidden_bias")]
        if model.head is not None:
            tensors += [_tensor("head.w", model.head[0]), _tensor("head.b", model.head[1])]
        attrs = {"classes": _labels(model.classes), "n_layers": len(model.rbms)}
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    return {"format": FORMAT, "version": 1, "kind": type(model).__name__, "attrs": attrs, "tensors": tensors}


def from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise ValueError("not a dltune checkpoint")
    t = {x["name"]: np.array(x["values"], dtype=float).reshape(x["shape"]) for x in d["tensors"]}
    attrs = d["attrs"]
    classes = None if attrs.get("classes") is None else np.array(attrs["classes"])
    head = (t["head.w"], t["head.b"]) if "head.w" in t else None
    kind = d["kind"]
    if kind == "FeedForwardModel":
        n = sum(1 for k in t if k.startswith("weights."))
        return FeedForwardModel(
            tuple(t[f"weights.{k}"] for k in range(n)),
            tuple(t[f"biases.{k}"] for k in range(n)),
            attrs["activation"],
            classes,
            attrs.get("output", "softmax"),
        )
    if kind == "RecurrentModel":
        return RecurrentModel(t["w_in"], t["w_nn"], t["w_o"], classes)
    if kind == "AutoencoderStack":
        levels = tuple(
            AutoencoderLevel(*(t[f"levels.{k}.{f}"] for f in ("w_enc", "b_enc", "w_dec", "b_dec")))
            for k in range(attrs["n_levels"])
        )
        return AutoencoderStack(levels, attrs["activation"], head, classes)
    if kind == "RbmStack":
        rbms = tuple(
            RBM(*(t[f"rbms.{k}.{f}"] for f in ("weights", "visible_bias", "hidden_bias")))
            for k in range(attrs["n_layers"])
        )
        return RbmStack(rbms, head, classes)
    raise ValueError(f"unknown checkpoint kind {kind!r}")


def save_model(model, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(model), fh)


def load_model(path: str | os.PathLike):
    with open(path) as fh:
        return from_dict(json.load(fh))
