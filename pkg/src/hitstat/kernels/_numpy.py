"""Pure numpy / scipy.sparse kernels, same signatures as ``_numba``."""

import numpy as np
import scipy.sparse as sp


def _csr(indptr, indices, data):
    n = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def evolve(indptr, indices, data, V, steps):
    P = _csr(indptr, indices, data)
    out = np.array(V, dtype=np.float64, copy=True)
    for _ in range(steps):
        out = np.asarray(out @ P)
    return out


def tv_trace(indptr, indices, data, V, pi, T):
    P = _csr(indptr, indices, data)
    v = np.array(V, dtype=np.float64, copy=True)
    D = np.empty((v.shape[0], T + 1))
    D[:, 0] = 0.5 * np.abs(v - pi).sum(axis=1)
    for t in range(1, T + 1):
        v = np.asarray(v @ P)
        D[:, t] = 0.5 * np.abs(v - pi).sum(axis=1)
    return D


def hitting_many(indptr, indices, data, V0, targets, T):
    P = _csr(indptr, indices, data)
    V = np.array(V0, dtype=np.float64, copy=True)
    k = V.shape[0]
    rows = np.arange(k)
    pmf = np.zeros((k, T + 1))
    surv = np.zeros((k, T + 1))
    pmf[:, 0] = V[rows, targets]
    V[rows, targets] = 0.0
    surv[:, 0] = V.sum(axis=1)
    for t in range(1, T + 1):
        V = np.asarray(V @ P)
        pmf[:, t] = V[rows, targets]
        V[rows, targets] = 0.0
        surv[:, t] = V.sum(axis=1)
    return pmf, surv


def killed_trace(indptr, indices, data, V0, alive, watch, T):
    P = _csr(indptr, indices, data)
    dead = ~np.asarray(alive, dtype=bool)
    V = np.array(V0, dtype=np.float64, copy=True)
    V[:, dead] = 0.0
    rows = np.arange(V.shape[0])
    out = np.zeros((V.shape[0], T + 1))
    out[:, 0] = V[rows, watch]
    for t in range(1, T + 1):
        V = np.asarray(V @ P)
        V[:, dead] = 0.0
        out[:, t] = V[rows, watch]
    return out


def running_max(indptr, indices, data, V, T, t0, emax, omax, earg, oarg):
    P = _csr(indptr, indices, data)
    v = V.copy()
    for t in range(t0, t0 + T + 1):
        if t > t0:
            v = np.asarray(v @ P)
        mx, arg = (emax, earg) if t % 2 == 0 else (omax, oarg)
        better = v > mx
        mx[better] = v[better]
        arg[better] = t
    V[...] = v


def column_even_sup(indptr, indices, data, f, K):
    P = _csr(indptr, indices, data)
    h = np.array(f, dtype=np.float64, copy=True)
    g = h.copy()
    for _ in range(K):
        h = P @ (P @ h)
        np.maximum(g, h, out=g)
    return g


def _padded(indptr, indices, cum):
    deg = np.diff(indptr)
    width = max(int(deg.max()), 1)
    n = deg.shape[0]
    cum_pad = np.full((n, width), np.inf)
    idx_pad = np.zeros((n, width), dtype=np.int64)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        cum_pad[i, : hi - lo] = cum[lo:hi]
        idx_pad[i, : hi - lo] = indices[lo:hi]
    return deg, cum_pad, idx_pad


def walk(indptr, indices, cum, states, target, U):
    deg, cum_pad, idx_pad = _padded(indptr, indices, cum)
    out = np.array(states, dtype=np.int64, copy=True)
    w, C = U.shape
    used = np.zeros(w, dtype=np.int64)
    hit = out == target
    active = ~hit
    for c in range(C):
        live = np.flatnonzero(active)
        if live.size == 0:
            break
        s = out[live]
        cnt = (cum_pad[s] <= U[live, c][:, None]).sum(axis=1)
        k = np.minimum(cnt, deg[s] - 1)
        nxt = idx_pad[s, k]
        out[live] = nxt
        used[live] += 1
        done = live[nxt == target]
        hit[done] = True
        active[done] = False
    return out, used, hit


def walk_path(indptr, indices, cum, s0, target, u):
    path = [int(s0)]
    s = int(s0)
    if s == target:
        return np.array(path, dtype=np.int64), True
    for uc in u:
        lo, hi = indptr[s], indptr[s + 1]
        k = min(int(np.searchsorted(cum[lo:hi], uc, side="right")), hi - lo - 1)
        s = int(indices[lo + k])
        path.append(s)
        if s == target:
            return np.array(path, dtype=np.int64), True
    return np.array(path, dtype=np.int64), False
