"""LSTM and dense layers with explicit forward and backward passes.

All functions accept a leading batch axis: vectors are ``(N, dim)`` and
sequences ``(N, T, dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _kernels as _k

GATES = ("f", "i", "o", "c")  # forget, input, output, candidate
LEAKY_ALPHA = 0.01


sigmoid = expit


def _floats(a):
    a = np.asarray(a)
    return a if a.dtype in (np.float64, np.longdouble) else a.astype(float)


def glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass(eq=False)
class LstmLayerParams:
    """Gate weights stacked as ``W[g]`` of shape ``(units, units + input_dim)``.

    Columns act on the concatenation ``[h_{t-1}, x_t]``; gate order is
    forget, input, output, candidate.
    """

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = _floats(self.W)
        self.b = _floats(self.b)
        if self.W.ndim != 3 or self.W.shape[0] != 4:
            raise ValueError(f"LSTM weights must have shape (4, units, units + input), got {self.W.shape}")
        if self.W.shape[2] <= self.W.shape[1] or self.b.shape != self.W.shape[:2]:
            raise ValueError(f"inconsistent LSTM shapes W={self.W.shape} b={self.b.shape}")

    @classmethod
    def init(cls, rng, input_dim: int, units: int) -> "LstmLayerParams":
        W = np.stack([glorot(rng, (units, units + input_dim), units + input_dim, units) for _ in GATES])
        return cls(W, np.zeros((4, units)))

    @property
    def units(self) -> int:
        return self.W.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[2] - self.W.shape[1]

    W_f = property(lambda self: self.W[0])
    W_i = property(lambda self: self.W[1])
    W_o = property(lambda self: self.W[2])
    W_c = property(lambda self: self.W[3])
    b_f = property(lambda self: self.b[0])
    b_i = property(lambda self: self.b[1])
    b_o = property(lambda self: self.b[2])
    b_c = property(lambda self: self.b[3])


@dataclass(eq=False)
class DenseLayerParams:
    W: np.ndarray
    b: np.ndarray
    activation: str = "leaky_relu"
    alpha: float = LEAKY_ALPHA

    def __post_init__(self):
        self.W = _floats(self.W)
        self.b = _floats(self.b)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent dense shapes W={self.W.shape} b={self.b.shape}")
        if self.activation not in ("leaky_relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def init(cls, rng, in_dim: int, out_dim: int, activation="leaky_relu", alpha=LEAKY_ALPHA):
        return cls(glorot(rng, (out_dim, in_dim), in_dim, out_dim), np.zeros(out_dim), activation, alpha)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


def leaky_relu(x, alpha=LEAKY_ALPHA):
    return np.where(x >= 0.0, x, alpha * x)


# --- LSTM -------------------------------------------------------------------


def lstm_cell_forward(params: LstmLayerParams, x_t, h_prev, c_prev):
    """One step of the cell; returns ``h``, ``c`` and the cache for backward."""
    x_t, h_prev, c_prev = (_floats(a) for a in (x_t, h_prev, c_prev))
    single = x_t.ndim == 1
    if single:
        x_t, h_prev, c_prev = x_t[None], h_prev[None], c_prev[None]
    u = params.units
    if x_t.shape[-1] != params.input_dim or h_prev.shape[-1] != u or c_prev.shape[-1] != u:
        raise ValueError(f"cell expects input {params.input_dim} and state {u}, got "
                         f"{x_t.shape[-1]}, {h_prev.shape[-1]}, {c_prev.shape[-1]}")
    z = np.concatenate([h_prev, x_t], axis=-1)
    pre = z @ params.W.reshape(4 * u, -1).T + params.b.reshape(-1)
    f = sigmoid(pre[:, :u])
    i = sigmoid(pre[:, u:2 * u])
    o = sigmoid(pre[:, 2 * u:3 * u])
    g = np.tanh(pre[:, 3 * u:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    cache = (z, f, i, o, g, c_prev, tc)
    if single:
        return {"h": h[0], "c": c[0], "cache": cache}
    return {"h": h, "c": c, "cache": cache}


def lstm_cell_backward(params: LstmLayerParams, cache, dh, dc, dW, db):
    """Accumulate parameter gradients into ``dW``/``db``; return ``(dh_prev, dc_prev, dx)``."""
    z, f, i, o, g, c_prev, tc = cache
    u = params.units
    dct = dc + dh * o * (1.0 - tc * tc)
    dpre = np.concatenate([
        dct * c_prev * f * (1.0 - f),
        dct * g * i * (1.0 - i),
        dh * tc * o * (1.0 - o),
        dct * i * (1.0 - g * g),
    ], axis=1)
    dW += (dpre.T @ z).reshape(dW.shape)
    db += dpre.sum(axis=0).reshape(db.shape)
    dz = dpre @ params.W.reshape(4 * u, -1)
    return dz[:, :u], dct * f, dz[:, u:]


def lstm_layer_forward(params: LstmLayerParams, X):
    """Run the cell over ``X`` of shape ``(N, T, input_dim)`` from zero state.

    Same arithmetic as repeated :func:`lstm_cell_forward` calls, with the
    input projection done for all steps at once. Works in whatever float
    type the parameters carry.
    """
    N, T, _ = X.shape
    u = params.units
    Wflat = params.W.reshape(4 * u, -1)
    Wh, Wx = Wflat[:, :u], Wflat[:, u:]
    pre_x = X @ Wx.T + params.b.reshape(-1)
    dt = pre_x.dtype
    h = np.zeros((N, u), dtype=dt)
    c = np.zeros((N, u), dtype=dt)
    H = np.empty((N, T, u), dtype=dt)
    gates = np.empty((N, T, 4 * u), dtype=dt)
    C = np.empty((N, T + 1, u), dtype=dt)
    TC = np.empty((N, T, u), dtype=dt)
    C[:, 0] = 0.0
    for t in range(T):
        pre = pre_x[:, t] + h @ Wh.T
        sig = expit(pre[:, :3 * u])
        g = np.tanh(pre[:, 3 * u:])
        c = sig[:, :u] * c + sig[:, u:2 * u] * g
        tc = np.tanh(c)
        h = sig[:, 2 * u:] * tc
        TC[:, t] = tc
        gates[:, t, :3 * u] = sig
        gates[:, t, 3 * u:] = g
        C[:, t + 1] = c
        H[:, t] = h
    return H, (X, H, gates, C, TC)


def lstm_layer_backward(params: LstmLayerParams, cache, dH):
    """Full backpropagation through time given the gradient on every output."""
    X, H, gates, C, TC = cache
    N, T, u = dH.shape
    Wflat = params.W.reshape(4 * u, -1)
    if dH.dtype == np.float64 and gates.dtype == np.float64:
        dX, dW, db = _k.lstm_backward(np.ascontiguousarray(Wflat[:, :u]), np.ascontiguousarray(Wflat[:, u:]),
                                      np.ascontiguousarray(X), H, gates, C, TC, np.ascontiguousarray(dH))
        return dX, dW.reshape(params.W.shape), db.reshape(params.b.shape)
    return _lstm_backward_numpy(params, cache, dH)


def _lstm_backward_numpy(params: LstmLayerParams, cache, dH):
    X, H, gates, C, TC = cache
    N, T, u = dH.shape
    Wflat = params.W.reshape(4 * u, -1)
    dpre = np.empty((N, T, 4 * u))
    dh_next = np.zeros((N, u))
    dc_next = np.zeros((N, u))
    for t in range(T - 1, -1, -1):
        f = gates[:, t, :u]
        i = gates[:, t, u:2 * u]
        o = gates[:, t, 2 * u:3 * u]
        g = gates[:, t, 3 * u:]
        tc = TC[:, t]
        dh = dH[:, t] + dh_next
        dct = dc_next + dh * o * (1.0 - tc * tc)
        d = dpre[:, t]
        d[:, :u] = dct * C[:, t] * f * (1.0 - f)
        d[:, u:2 * u] = dct * g * i * (1.0 - i)
        d[:, 2 * u:3 * u] = dh * tc * o * (1.0 - o)
        d[:, 3 * u:] = dct * i * (1.0 - g * g)
        dh_next = d @ Wflat[:, :u]
        dc_next = dct * f
    H_prev = np.concatenate([np.zeros((N, 1, u)), H[:, :-1]], axis=1)
    Z = np.concatenate([H_prev, X], axis=2).reshape(N * T, -1)
    D = dpre.reshape(N * T, 4 * u)
    dW = (D.T @ Z).reshape(params.W.shape)
    db = D.sum(axis=0).reshape(params.b.shape)
    dX = dpre @ Wflat[:, u:]
    return dX, dW, db


# --- dense ------------------------------------------------------------------


def dense_forward(params: DenseLayerParams, x):
    pre = x @ params.W.T + params.b
    out = leaky_relu(pre, params.alpha) if params.activation == "leaky_relu" else pre
    return out, (x, pre)


def dense_backward(params: DenseLayerParams, cache, dout):
    x, pre = cache
    if params.activation == "leaky_relu":
        dout = dout * np.where(pre >= 0.0, 1.0, params.alpha)
    return dout @ params.W, dout.T @ x, dout.sum(axis=0)
