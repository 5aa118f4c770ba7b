"""Independent reference computations used across the test suite.

Nothing here touches ``hitstat.kernels``; everything is dense numpy or
explicit enumeration.
"""

import itertools
from fractions import Fraction

import numpy as np

from hitstat.chain import ChainSpec


def rand_stochastic(n, rng, density=1.0):
    P = rng.random((n, n)) * (rng.random((n, n)) < density)
    for i in range(n):
        if P[i].sum() == 0:
            P[i, rng.integers(n)] = 1.0
    return P / P.sum(axis=1, keepdims=True)


def rand_reversible(n, rng, lazy=0.0):
    W = rng.random((n, n))
    W = W + W.T
    P = W / W.sum(axis=1, keepdims=True)
    return lazy * np.eye(n) + (1 - lazy) * P


def chain_of(P):
    return ChainSpec.from_dense(np.asarray(P, dtype=np.float64))


def taboo_pmf(P, x, y, T):
    """``P_x(tau(y) = t)`` from powers of the taboo matrix (column y zeroed)."""
    P = np.asarray(P, dtype=np.float64)
    Q = P.copy()
    Q[:, y] = 0.0
    out = np.zeros(T + 1)
    v = np.zeros(len(P))
    v[x] = 1.0
    if x == y:
        out[0] = 1.0
        return out
    for t in range(1, T + 1):
        out[t] = v @ P[:, y]
        v = v @ Q
    return out


def enumerate_pmf(P, x, y, T):
    """Same quantity by summing the weight of every path; exact rationals
    when ``P`` holds Fractions."""
    n = len(P)
    out = [Fraction(0)] * (T + 1) if isinstance(P[0][0], Fraction) else [0.0] * (T + 1)
    if x == y:
        out[0] = type(out[0])(1)
        return out
    for t in range(1, T + 1):
        for mid in itertools.product([s for s in range(n) if s != y], repeat=t - 1):
            w = type(out[0])(1)
            prev = x
            for s in (*mid, y):
                w = w * P[prev][s]
                prev = s
                if w == 0:
                    break
            out[t] += w
    return out


def enumerate_surprise(P, x, T):
    """``P_x(S_t)`` by enumerating all paths of length t."""
    n = len(P)
    out = [0.0] * (T + 1)
    out[0] = 1.0
    for t in range(1, T + 1):
        for path in itertools.product(range(n), repeat=t):
            w = 1.0
            prev = x
            for s in path:
                w *= P[prev][s]
                prev = s
            if w and path[-1] not in (x, *path[:-1]):
                out[t] += w
    return out


def dense_stationary(P):
    vals, vecs = np.linalg.eig(np.asarray(P).T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    return v / v.sum()


def dense_maxprob(P, x, T):
    """``max_{t <= T} P^t(x, .)`` by repeated dense multiplication."""
    v = np.zeros(len(P))
    v[x] = 1.0
    best = v.copy()
    for _ in range(T):
        v = v @ P
        best = np.maximum(best, v)
    return best
