"""numba kernels.

All chains arrive as CSR triples ``(indptr, indices, data)`` of the
row-stochastic matrix; distributions are row vectors, so one step is
``v -> v P``. Each kernel mirrors a function of the same name and signature
in ``_numpy``.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _step(indptr, indices, data, v, w):
    n = v.shape[0]
    for j in range(n):
        w[j] = 0.0
    for i in range(n):
        vi = v[i]
        if vi != 0.0:
            for e in range(indptr[i], indptr[i + 1]):
                w[indices[e]] += vi * data[e]


@njit(cache=True)
def evolve(indptr, indices, data, V, steps):
    k, n = V.shape
    out = V.copy()
    w = np.empty(n)
    for r in range(k):
        v = out[r]
        for _ in range(steps):
            _step(indptr, indices, data, v, w)
            for j in range(n):
                v[j] = w[j]
    return out


@njit(cache=True)
def tv_trace(indptr, indices, data, V, pi, T):
    k, n = V.shape
    D = np.empty((k, T + 1))
    v = np.empty(n)
    w = np.empty(n)
    for r in range(k):
        for j in range(n):
            v[j] = V[r, j]
        for t in range(T + 1):
            if t > 0:
                _step(indptr, indices, data, v, w)
                for j in range(n):
                    v[j] = w[j]
            acc = 0.0
            for j in range(n):
                acc += abs(v[j] - pi[j])
            D[r, t] = 0.5 * acc
    return D


@njit(cache=True, parallel=True)
def hitting_many(indptr, indices, data, V0, targets, T):
    k, n = V0.shape
    pmf = np.zeros((k, T + 1))
    surv = np.zeros((k, T + 1))
    for r in prange(k):
        y = targets[r]
        v = V0[r].copy()
        w = np.empty(n)
        pmf[r, 0] = v[y]
        v[y] = 0.0
        surv[r, 0] = v.sum()
        for t in range(1, T + 1):
            _step(indptr, indices, data, v, w)
            pmf[r, t] = w[y]
            w[y] = 0.0
            s = 0.0
            for j in range(n):
                v[j] = w[j]
                s += w[j]
            surv[r, t] = s
    return pmf, surv


@njit(cache=True)
def killed_trace(indptr, indices, data, V0, alive, watch, T):
    k, n = V0.shape
    out = np.zeros((k, T + 1))
    v = np.empty(n)
    w = np.empty(n)
    for r in range(k):
        for j in range(n):
            v[j] = V0[r, j] if alive[j] else 0.0
        out[r, 0] = v[watch[r]]
        for t in range(1, T + 1):
            _step(indptr, indices, data, v, w)
            for j in range(n):
                v[j] = w[j] if alive[j] else 0.0
            out[r, t] = v[watch[r]]
    return out


@njit(cache=True)
def running_max(indptr, indices, data, V, T, t0, emax, omax, earg, oarg):
    """Advance ``V`` by ``T`` steps from absolute time ``t0``, folding every
    visited row into the even/odd maxima in place (time ``t0`` included)."""
    k, n = V.shape
    w = np.empty(n)
    for r in range(k):
        v = V[r]
        for t in range(t0, t0 + T + 1):
            if t > t0:
                _step(indptr, indices, data, v, w)
                for j in range(n):
                    v[j] = w[j]
            if t % 2 == 0:
                for j in range(n):
                    if v[j] > emax[r, j]:
                        emax[r, j] = v[j]
                        earg[r, j] = t
            else:
                for j in range(n):
                    if v[j] > omax[r, j]:
                        omax[r, j] = v[j]
                        oarg[r, j] = t


@njit(cache=True)
def _apply(indptr, indices, data, h, out):
    n = h.shape[0]
    for i in range(n):
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            acc += data[e] * h[indices[e]]
        out[i] = acc


@njit(cache=True)
def column_even_sup(indptr, indices, data, f, K):
    n = f.shape[0]
    h = f.copy()
    g = f.copy()
    tmp = np.empty(n)
    for _ in range(K):
        _apply(indptr, indices, data, h, tmp)
        _apply(indptr, indices, data, tmp, h)
        for j in range(n):
            if h[j] > g[j]:
                g[j] = h[j]
    return g


@njit(cache=True)
def _next_state(indptr, indices, cum, s, u):
    lo = indptr[s]
    hi = indptr[s + 1]
    j = lo
    while j < hi - 1 and cum[j] <= u:
        j += 1
    return indices[j]


@njit(cache=True, parallel=True)
def walk(indptr, indices, cum, states, target, U):
    w, C = U.shape
    out = states.copy()
    used = np.zeros(w, dtype=np.int64)
    hit = np.zeros(w, dtype=np.bool_)
    for r in prange(w):
        s = out[r]
        if s == target:
            hit[r] = True
            continue
        c = 0
        while c < C:
            s = _next_state(indptr, indices, cum, s, U[r, c])
            c += 1
            if s == target:
                hit[r] = True
                break
        out[r] = s
        used[r] = c
    return out, used, hit


@njit(cache=True)
def walk_path(indptr, indices, cum, s0, target, u):
    C = u.shape[0]
    path = np.empty(C + 1, dtype=np.int64)
    path[0] = s0
    s = s0
    if s == target:
        return path[:1].copy(), True
    for c in range(C):
        s = _next_state(indptr, indices, cum, s, u[c])
        path[c + 1] = s
        if s == target:
            return path[: c + 2].copy(), True
    return path, False
