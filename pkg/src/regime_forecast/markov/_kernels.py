"""Compiled recursions for plain and explicit-duration chains.

Emission likelihoods enter pre-scaled (``e[t, j] = b_j(x_t) / max_j b_j(x_t)``)
and every time step is renormalised by the one-step predictive density
``n[t]``, so ``log p(X) = sum(log n) + sum(log max_j b_j(x_t))``.

Semi-Markov conventions (0-based time, ``U`` = maximum duration):

* ``S[t, j]`` -- a visit to ``j`` starts at ``t`` (scaled by ``n[0..t-1]``).
* ``F[t, j]`` -- a visit to ``j`` ends at ``t`` (scaled by ``n[0..t]``).
* ``B[t, j]`` -- future observations given a visit to ``j`` starts at ``t``.
* ``G[t, j]`` -- future observations given a visit to ``j`` ended at ``t``.

The visit that covers the final observation is right-censored and scored
with the survival function instead of the pmf.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def hmm_forward(pi, A, e):
    T, M = e.shape
    alpha = np.zeros((T, M))
    n = np.zeros(T)
    for j in range(M):
        alpha[0, j] = pi[j] * e[0, j]
    n[0] = alpha[0].sum()
    if n[0] <= 0.0:
        return alpha, n
    alpha[0] /= n[0]
    for t in range(1, T):
        for j in range(M):
            s = 0.0
            for i in range(M):
                s += alpha[t - 1, i] * A[i, j]
            alpha[t, j] = s * e[t, j]
        n[t] = alpha[t].sum()
        if n[t] <= 0.0:
            return alpha, n
        alpha[t] /= n[t]
    return alpha, n


@njit(cache=True)
def hmm_backward(A, e, n):
    T, M = e.shape
    beta = np.zeros((T, M))
    beta[T - 1, :] = 1.0
    for t in range(T - 2, -1, -1):
        for i in range(M):
            s = 0.0
            for j in range(M):
                s += A[i, j] * e[t + 1, j] * beta[t + 1, j]
            beta[t, i] = s / n[t + 1]
    return beta


@njit(cache=True)
def hmm_transition_counts(A, e, n, alpha, beta):
    T, M = e.shape
    xi = np.zeros((M, M))
    for t in range(T - 1):
        for i in range(M):
            a = alpha[t, i]
            if a == 0.0:
                continue
            for j in range(M):
                xi[i, j] += a * A[i, j] * e[t + 1, j] * beta[t + 1, j] / n[t + 1]
    return xi


@njit(cache=True)
def hmm_viterbi(logpi, logA, loge):
    T, M = loge.shape
    delta = np.empty((T, M))
    back = np.zeros((T, M), dtype=np.int64)
    for j in range(M):
        delta[0, j] = logpi[j] + loge[0, j]
    for t in range(1, T):
        for j in range(M):
            best = -np.inf
            arg = 0
            for i in range(M):
                v = delta[t - 1, i] + logA[i, j]
                if v > best:
                    best = v
                    arg = i
            delta[t, j] = best + loge[t, j]
            back[t, j] = arg
    path = np.zeros(T, dtype=np.int64)
    best = -np.inf
    for j in range(M):
        if delta[T - 1, j] > best:
            best = delta[T - 1, j]
            path[T - 1] = j
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best


@njit(cache=True)
def hsmm_forward(pi, A, d, D, e):
    T, M = e.shape
    U = d.shape[1]
    F = np.zeros((T, M))
    S = np.zeros((T, M))
    R = np.zeros((T, M))  # e / n, filled once n[t] is known
    filt = np.zeros((T, M))
    n = np.zeros(T)
    for t in range(T):
        for j in range(M):
            if t == 0:
                S[0, j] = pi[j]
            else:
                s = 0.0
                for i in range(M):
                    s += F[t - 1, i] * A[i, j]
                S[t, j] = s
        tot = 0.0
        for j in range(M):
            prod = e[t, j]
            fsum = 0.0
            alive = 0.0
            umax = min(t + 1, U)
            for u in range(1, umax + 1):
                s0 = t - u + 1
                if u > 1:
                    prod *= R[s0, j]
                if prod == 0.0:
                    break
                w = S[s0, j] * prod
                fsum += w * d[j, u - 1]
                alive += w * D[j, u - 1]
            F[t, j] = fsum
            filt[t, j] = alive
            tot += alive
        n[t] = tot
        if tot <= 0.0:
            return F, S, R, filt, n
        for j in range(M):
            F[t, j] /= tot
            filt[t, j] /= tot
            R[t, j] = e[t, j] / tot
    return F, S, R, filt, n


@njit(cache=True)
def hsmm_backward(A, d, D, R):
    T, M = R.shape
    U = d.shape[1]
    B = np.zeros((T, M))
    G = np.zeros((T, M))
    G[T - 1, :] = 1.0
    for t in range(T - 1, -1, -1):
        for j in range(M):
            prod = 1.0
            bsum = 0.0
            umax = min(U, T - t)
            for u in range(1, umax + 1):
                end = t + u - 1
                prod *= R[end, j]
                if prod == 0.0:
                    break
                if end == T - 1:
                    bsum += D[j, u - 1] * prod
                else:
                    bsum += d[j, u - 1] * prod * G[end, j]
            B[t, j] = bsum
        if t >= 1:
            for i in range(M):
                s = 0.0
                for j in range(M):
                    s += A[i, j] * B[t, j]
                G[t - 1, i] = s
    return B, G


@njit(cache=True)
def hsmm_expectations(A, d, D, R, F, S, B, G):
    """Occupancy, transition and duration expectations from both passes."""
    T, M = R.shape
    U = d.shape[1]
    start = S * B
    end = np.zeros((T, M))
    for t in range(T - 1):
        for j in range(M):
            end[t, j] = F[t, j] * G[t, j]
    gamma = np.zeros((T, M))
    for j in range(M):
        acc = 0.0
        for t in range(T):
            acc += start[t, j]
            if t >= 1:
                acc -= end[t - 1, j]
            gamma[t, j] = acc
    xi = np.zeros((M, M))
    for t in range(1, T):
        for i in range(M):
            f = F[t - 1, i]
            if f == 0.0:
                continue
            for j in range(M):
                xi[i, j] += f * A[i, j] * B[t, j]
    eta = np.zeros((M, U))
    eta_cens = np.zeros((M, U))
    for t in range(T):
        for j in range(M):
            s = S[t, j]
            if s == 0.0:
                continue
            prod = 1.0
            umax = min(U, T - t)
            for u in range(1, umax + 1):
                stop = t + u - 1
                prod *= R[stop, j]
                if prod == 0.0:
                    break
                if stop == T - 1:
                    eta_cens[j, u - 1] += s * D[j, u - 1] * prod
                else:
                    eta[j, u - 1] += s * d[j, u - 1] * prod * G[stop, j]
    return gamma, xi, eta, eta_cens


@njit(cache=True)
def hsmm_viterbi(logpi, logA, logd, logD, loge):
    T, M = loge.shape
    U = logd.shape[1]
    VF = np.full((T, M), -np.inf)
    VS = np.full((T, M), -np.inf)
    arg_u = np.zeros((T, M), dtype=np.int64)
    arg_i = np.zeros((T, M), dtype=np.int64)
    for t in range(T):
        for j in range(M):
            if t == 0:
                VS[0, j] = logpi[j]
            else:
                best = -np.inf
                arg = 0
                for i in range(M):
                    v = VF[t - 1, i] + logA[i, j]
                    if v > best:
                        best = v
                        arg = i
                VS[t, j] = best
                arg_i[t, j] = arg
        for j in range(M):
            acc = 0.0
            best = -np.inf
            bu = 1
            for u in range(1, min(t + 1, U) + 1):
                s0 = t - u + 1
                acc += loge[s0, j]
                v = VS[s0, j] + logd[j, u - 1] + acc
                if v > best:
                    best = v
                    bu = u
            VF[t, j] = best
            arg_u[t, j] = bu
    # censored final visit
    best = -np.inf
    bj = 0
    bu = 1
    for j in range(M):
        acc = 0.0
        for u in range(1, min(T, U) + 1):
            s0 = T - u
            acc += loge[s0, j]
            v = VS[s0, j] + logD[j, u - 1] + acc
            if v > best:
                best = v
                bj = j
                bu = u
    path = np.zeros(T, dtype=np.int64)
    stop = T - 1
    j = bj
    u = bu
    while True:
        s0 = stop - u + 1
        for t in range(s0, stop + 1):
            path[t] = j
        if s0 == 0:
            break
        i = arg_i[s0, j]
        stop = s0 - 1
        j = i
        u = arg_u[stop, j]
    return path, best
