"""Central finite-difference verification of network gradients."""

from __future__ import annotations

import copy

import numpy as np

from .layers import dense_forward, lstm_layer_forward
from .network import NetworkGraph, _as_batches, backward, forward
from .optim import mse_loss

REL_FLOOR = 1e-12


def sample_loss(net: NetworkGraph, inputs, targets) -> float:
    pred = np.atleast_1d(forward(net, inputs)["prediction"])
    r = pred - np.asarray(targets, dtype=pred.dtype)
    return np.mean(r * r)


def analytic_gradients(net: NetworkGraph, inputs, targets) -> dict:
    out = forward(net, inputs)
    loss = mse_loss(out["prediction"], targets)
    return backward(net, out["cache"], loss["grad"])


def _cast(net: NetworkGraph, dtype) -> NetworkGraph:
    shadow = copy.deepcopy(net)
    for layer in [*(l for b in shadow.branches for l in b), *shadow.head]:
        layer.W = layer.W.astype(dtype)
        layer.b = layer.b.astype(dtype)
    return shadow


def gradient_check(net: NetworkGraph, sample, eps: float = 1e-5, backward_fn=None,
                   numeric_dtype=np.longdouble) -> float:
    """Worst relative disagreement between backprop and central differences.

    ``sample`` is ``(inputs, targets)``; the loss is MSE over the sample.
    Differences are taken on a copy of the network held in ``numeric_dtype``.
    The extended-precision default keeps rounding noise in the difference
    quotient (about 1e-11 absolute in 64-bit) well below the smallest
    gradients of a deep recurrent net; pass ``np.float64`` for a plain check.
    ``backward_fn(net, inputs, targets)`` may replace the analytic gradient,
    which is how corrupted gradients are injected in tests.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    inputs, targets = sample
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    grads = (backward_fn or analytic_gradients)(net, inputs, targets)
    shadow = _cast(net, numeric_dtype)
    inputs, _ = _as_batches(shadow, inputs)
    step = np.asarray(eps, dtype=numeric_dtype)

    # layer inputs of the unperturbed net; a perturbation only reruns what follows it
    seqs = []
    for layers, X in zip(shadow.branches, inputs):
        chain = [X]
        for layer in layers:
            chain.append(lstm_layer_forward(layer, chain[-1])[0])
        seqs.append(chain)
    lasts = [chain[-1][:, -1] for chain in seqs]

    def loss_from(branch=None, layer=0):
        heads = list(lasts)
        if branch is not None:
            H = seqs[branch][layer]
            for lstm in shadow.branches[branch][layer:]:
                H = lstm_layer_forward(lstm, H)[0]
            heads[branch] = H[:, -1]
        a = np.concatenate(heads, axis=1)
        for dense in shadow.head:
            a = dense_forward(dense, a)[0]
        pred = (a @ shadow.reduction.T if shadow.reduction is not None else a)[:, 0]
        r = pred - targets.astype(pred.dtype)
        return np.mean(r * r)

    where = {}
    for bi, layers in enumerate(shadow.branches):
        for li in range(len(layers)):
            where[f"branch{bi}.lstm{li}.W"] = where[f"branch{bi}.lstm{li}.b"] = (bi, li)
    worst = 0.0
    for name, p in shadow.parameters().items():
        at = where.get(name, (None, 0))
        flat = p.reshape(-1)
        gflat = np.asarray(grads[name], dtype=float).reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = loss_from(*at)
            flat[j] = orig - step
            down = loss_from(*at)
            flat[j] = orig
            num = float((up - down) / (2 * step))
            err = abs(gflat[j] - num) / max(abs(gflat[j]), abs(num), REL_FLOOR)
            worst = max(worst, err)
    return worst
