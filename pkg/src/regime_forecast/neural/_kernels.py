"""Compiled backpropagation-through-time loop for 64-bit LSTM layers."""

import numpy as np
from numba import njit


@njit(cache=True)
def lstm_backward(Wh, Wx, X, H, gates, C, TC, dH):
    N, T, u = dH.shape
    d = X.shape[2]
    dpre = np.empty((N, T, 4 * u))
    dh_next = np.zeros((N, u))
    dc_next = np.zeros((N, u))
    step = np.empty((N, 4 * u))
    for t in range(T - 1, -1, -1):
        for n in range(N):
            for k in range(u):
                f = gates[n, t, k]
                i = gates[n, t, u + k]
                o = gates[n, t, 2 * u + k]
                g = gates[n, t, 3 * u + k]
                tc = TC[n, t, k]
                dh = dH[n, t, k] + dh_next[n, k]
                dct = dc_next[n, k] + dh * o * (1.0 - tc * tc)
                step[n, k] = dct * C[n, t, k] * f * (1.0 - f)
                step[n, u + k] = dct * g * i * (1.0 - i)
                step[n, 2 * u + k] = dh * tc * o * (1.0 - o)
                step[n, 3 * u + k] = dct * i * (1.0 - g * g)
                dc_next[n, k] = dct * f
        dpre[:, t, :] = step
        dh_next = np.dot(step, Wh)
    Z = np.empty((N, T, u + d))
    for n in range(N):
        for k in range(u):
            Z[n, 0, k] = 0.0
        for t in range(1, T):
            for k in range(u):
                Z[n, t, k] = H[n, t - 1, k]
        for t in range(T):
            for m in range(d):
                Z[n, t, u + m] = X[n, t, m]
    D = dpre.reshape(N * T, 4 * u)
    dW = np.dot(D.T, Z.reshape(N * T, u + d))
    db = D.sum(axis=0)
    dX = np.dot(D, Wx).reshape(N, T, d)
    return dX, dW, db
