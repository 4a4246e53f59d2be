"""Multi-branch LSTM networks with a dense regression head."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import NumericError
from .layers import (
    LEAKY_ALPHA, DenseLayerParams, LstmLayerParams, dense_backward, dense_forward,
    lstm_layer_backward, lstm_layer_forward,
)

FORMAT_NAME = "regime-forecast/network"
FORMAT_VERSION = 1


@dataclass(eq=False)
class NetworkGraph:
    """Branches of stacked LSTMs, concatenated and fed to dense layers.

    Each branch reads one input stream of shape ``(window, input_dims[b])``
    and contributes its last hidden state (or, with no LSTM layers, the last
    input step). ``reduction`` is a fixed, untrained row vector applied after
    the head when the head ends in more than one unit.
    """

    branches: list
    head: list
    input_dims: tuple
    window: int
    reduction: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.input_dims = tuple(int(d) for d in self.input_dims)
        if len(self.branches) != len(self.input_dims) or not self.branches:
            raise ValueError("need one input width per branch and at least one branch")
        merged = 0
        for layers, dim in zip(self.branches, self.input_dims):
            for layer in layers:
                if layer.input_dim != dim:
                    raise ValueError(f"LSTM layer expects input {layer.input_dim}, stream provides {dim}")
                dim = layer.units
            merged += dim
        if not self.head:
            raise ValueError("dense head must have at least one layer")
        for layer in self.head:
            if layer.in_dim != merged:
                raise ValueError(f"dense layer expects {layer.in_dim} inputs, receives {merged}")
            merged = layer.out_dim
        if self.reduction is not None:
            self.reduction = np.asarray(self.reduction, dtype=float).reshape(1, -1)
            if self.reduction.shape[1] != merged:
                raise ValueError("reduction width does not match the head output")
            merged = 1
        if merged != 1:
            raise ValueError(f"network must end in a single output, ends in {merged}")

    @property
    def merged_width(self) -> int:
        return self.head[0].in_dim

    @property
    def feature_width(self) -> int:
        return self.head[-2].out_dim if len(self.head) > 1 else self.merged_width

    def parameters(self) -> dict:
        """Trainable arrays by stable name (live references, not copies)."""
        out = {}
        for bi, layers in enumerate(self.branches):
            for li, layer in enumerate(layers):
                out[f"branch{bi}.lstm{li}.W"] = layer.W
                out[f"branch{bi}.lstm{li}.b"] = layer.b
        for li, layer in enumerate(self.head):
            out[f"dense{li}.W"] = layer.W
            out[f"dense{li}.b"] = layer.b
        return out

    def num_parameters(self) -> int:
        return sum(a.size for a in self.parameters().values())

    def copy_parameters(self) -> dict:
        return {k: v.copy() for k, v in self.parameters().items()}

    def load_parameters(self, values: dict) -> None:
        for name, arr in self.parameters().items():
            arr[...] = values[name]

    def describe(self) -> dict:
        return {
            "branches": [[layer.units for layer in layers] for layers in self.branches],
            "input_dims": list(self.input_dims),
            "dense": [layer.out_dim for layer in self.head],
            "activations": [layer.activation for layer in self.head],
            "alpha": self.head[0].alpha,
            "window": self.window,
            "reduction": None if self.reduction is None else self.reduction.ravel().tolist(),
            "meta": self.meta,
        }


def make_network(rng, input_dims, branch_units, dense_units, window: int,
                 alpha: float = LEAKY_ALPHA, reduction=None, meta=None) -> NetworkGraph:
    """Randomly initialised network; the last dense layer is linear."""
    branches = []
    merged = 0
    for dim, units in zip(input_dims, branch_units):
        layers = []
        for u in units:
            layers.append(LstmLayerParams.init(rng, dim, u))
            dim = u
        branches.append(layers)
        merged += dim
    head = []
    for li, u in enumerate(dense_units):
        act = "linear" if li == len(dense_units) - 1 else "leaky_relu"
        head.append(DenseLayerParams.init(rng, merged, u, act, alpha))
        merged = u
    return NetworkGraph(branches, head, tuple(input_dims), window, reduction, dict(meta or {}))


def _as_batches(net: NetworkGraph, inputs):
    if isinstance(inputs, np.ndarray):
        inputs = [inputs]
    dt = net.head[0].W.dtype
    inputs = [np.asarray(x, dtype=dt) for x in inputs]
    if len(inputs) != len(net.branches):
        raise ValueError(f"network has {len(net.branches)} branches, got {len(inputs)} input streams")
    single = inputs[0].ndim == 2
    if single:
        inputs = [x[None] for x in inputs]
    n = inputs[0].shape[0]
    for x, dim in zip(inputs, net.input_dims):
        if x.ndim != 3 or x.shape[0] != n or x.shape[1] != net.window or x.shape[2] != dim:
            raise ValueError(f"expected input of shape (N, {net.window}, {dim}), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("network input contains non-finite values")
    return inputs, single


def forward(net: NetworkGraph, inputs) -> dict:
    """Prediction, penultimate-layer features and the cache for :func:`backward`."""
    streams, single = _as_batches(net, inputs)
    branch_caches, outs = [], []
    for layers, X in zip(net.branches, streams):
        caches = []
        H = X
        for layer in layers:
            H, c = lstm_layer_forward(layer, H)
            caches.append(c)
        branch_caches.append((caches, X.shape))
        outs.append(H[:, -1])
    a = np.concatenate(outs, axis=1)
    merged = a
    head_caches = []
    features = a
    for li, layer in enumerate(net.head):
        if li == len(net.head) - 1:
            features = a
        a, c = dense_forward(layer, a)
        head_caches.append(c)
    pred = a @ net.reduction.T if net.reduction is not None else a
    pred = pred[:, 0]
    cache = {"branches": branch_caches, "head": head_caches, "merged": merged, "id": id(net),
             "widths": [o.shape[1] for o in outs]}
    if single:
        return {"prediction": pred[0], "features": features[0], "cache": cache}
    return {"prediction": pred, "features": features, "cache": cache}


def backward(net: NetworkGraph, cache, loss_grad) -> dict:
    """Exact gradients of the loss for every parameter, keyed as in ``parameters()``."""
    if cache is None or cache.get("id") != id(net):
        raise ValueError("cache is missing or was produced by a different network")
    n = cache["merged"].shape[0]
    g = np.asarray(loss_grad, dtype=float).reshape(n, 1)
    grads = {}
    if net.reduction is not None:
        g = g @ net.reduction
    for li in range(len(net.head) - 1, -1, -1):
        layer = net.head[li]
        g, dW, db = dense_backward(layer, cache["head"][li], g)
        grads[f"dense{li}.W"] = dW
        grads[f"dense{li}.b"] = db
    offset = 0
    for bi, (layers, (caches, shape)) in enumerate(zip(net.branches, cache["branches"])):
        w = cache["widths"][bi]
        g_last = g[:, offset:offset + w]
        offset += w
        if not layers:
            continue
        dH = np.zeros((shape[0], shape[1], layers[-1].units))
        dH[:, -1] = g_last
        for li in range(len(layers) - 1, -1, -1):
            dH, dW, db = lstm_layer_backward(layers[li], caches[li], dH)
            grads[f"branch{bi}.lstm{li}.W"] = dW
            grads[f"branch{bi}.lstm{li}.b"] = db
    return {k: grads[k] for k in net.parameters()}


def predict(net: NetworkGraph, inputs, batch_size: int = 1024):
    """Predictions and features without keeping caches around."""
    streams, single = _as_batches(net, inputs)
    n = streams[0].shape[0]
    preds, feats = [], []
    for lo in range(0, n, batch_size):
        out = forward(net, [s[lo:lo + batch_size] for s in streams])
        preds.append(out["prediction"])
        feats.append(out["features"])
    pred, feat = np.concatenate(preds), np.concatenate(feats)
    if not np.all(np.isfinite(pred)):
        raise NumericError("network produced non-finite predictions")
    return pred, feat


# --- checkpoints ------------------------------------------------------------


def network_to_dict(net: NetworkGraph, optimizer=None) -> dict:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "architecture": net.describe(),
        "params": {k: v.ravel().tolist() for k, v in net.parameters().items()},
    }
    if optimizer is not None:
        doc["optimizer"] = optimizer.to_dict()
    return doc


def network_from_dict(doc: dict) -> NetworkGraph:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a network checkpoint (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    arch = doc["architecture"]
    shell = make_network(np.random.default_rng(0), arch["input_dims"], arch["branches"], arch["dense"],
                         arch["window"], arch["alpha"], arch["reduction"], arch.get("meta"))
    for layer, act in zip(shell.head, arch["activations"]):
        layer.activation = act
    for name, arr in shell.parameters().items():
        flat = np.asarray(doc["params"][name], dtype=float)
        if flat.size != arr.size:
            raise ValueError(f"checkpoint parameter {name} has {flat.size} values, expected {arr.size}")
        arr[...] = flat.reshape(arr.shape)
    return shell


def save_network(net: NetworkGraph, path, optimizer=None) -> None:
    doc = network_to_dict(net, optimizer)
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_network(path) -> NetworkGraph:
    return network_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
