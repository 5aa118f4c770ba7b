"""Exact hitting-time and surprise distributions, path sampling, loop
erasure and Monte Carlo moments of hitting times.

Convention: ``tau(y) = min{t >= 0 : X_t = y}``, so ``tau(y) = 0`` when the
chain starts at ``y``.
"""

import io
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .chain import ChainSpec, point_mass, stationary
from .errors import CapExceeded, Unreachable, ValidationError

DEFAULT_CAP = 10**8


@dataclass(frozen=True, eq=False)
class HittingPmf:
    """``pmf[t] = P(tau(y) = t)`` for t = 0..horizon; ``x is None`` means the
    chain was started from a distribution (e.g. stationarity)."""

    x: Optional[int]
    y: int
    horizon: int
    pmf: np.ndarray
    tail: float
    survival: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,p,tail_flag\n")
        for t, p in enumerate(self.pmf):
            buf.write(f"{t},{float(p)!r},{int(self.survival[t] > 0)}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class SurprisePmf:
    """``s[t] = P_x(S_t)``, the chance that the state at time t is new.

    Index 0 is kept (value 1, since X_0 is trivially unseen) so that
    ``s[t] == sum_y P_x(tau(y) = t)`` holds for every index.
    """

    x: int
    horizon: int
    s: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,p\n")
        for t in range(self.horizon + 1):
            buf.write(f"{t},{float(self.s[t])!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    samples: int
    ci95_mean: float
    seed: int

    def to_json(self):
        return json.dumps(
            {
                "mean": self.mean,
                "variance": self.variance,
                "samples": self.samples,
                "ci95_mean": self.ci95_mean,
                "seed": self.seed,
            },
            sort_keys=True,
        )


@dataclass(frozen=True, eq=False)
class SampledPath:
    states: np.ndarray
    truncated: bool

    @property
    def hitting_time(self):
        return len(self.states) - 1


def _ro(a):
    a.setflags(write=False)
    return a


def hitting_pmf_from(chain: ChainSpec, init, y, T: int) -> HittingPmf:
    """Hitting pmf of ``y`` for the chain started from distribution ``init``."""
    if T < 0:
        raise ValidationError("horizon must be non-negative")
    yi = chain.index(y)
    V0 = np.asarray(init, dtype=np.float64).reshape(1, chain.n).copy()
    pmf, surv = kernels.hitting_many(*chain.csr, V0, np.array([yi], dtype=np.int64), int(T))
    return HittingPmf(None, yi, int(T), _ro(pmf[0]), float(surv[0, -1]), _ro(surv[0]))


def hitting_pmf(chain: ChainSpec, x, y, T: int) -> HittingPmf:
    """Exact ``P_x(tau(y) = t)`` for t = 0..T by killing mass at ``y``."""
    xi = chain.index(x)
    res = hitting_pmf_from(chain, point_mass(chain, xi), y, T)
    return HittingPmf(xi, res.y, res.horizon, res.pmf, res.tail, res.survival)


def hitting_table(chain: ChainSpec, T: int, starts=None, targets=None):
    """All-pairs exact pmfs: ``H[i, j, t] = P_{starts[i]}(tau(targets[j]) = t)``.

    Returns ``(H, S)`` with ``S`` the matching survival functions.
    """
    n = chain.n
    starts = np.arange(n) if starts is None else np.asarray([chain.index(s) for s in starts])
    targets = np.arange(n) if targets is None else np.asarray([chain.index(s) for s in targets])
    a, b = len(starts), len(targets)
    V0 = np.zeros((a * b, n))
    V0[np.arange(a * b), np.repeat(starts, b)] = 1.0
    tg = np.tile(targets, a).astype(np.int64)
    pmf, surv = kernels.hitting_many(*chain.csr, V0, tg, int(T))
    return pmf.reshape(a, b, T + 1), surv.reshape(a, b, T + 1)


def surprise_pmf(chain: ChainSpec, x, T: int) -> SurprisePmf:
    """``P_x(S_t) = sum_y P_x(tau(y) = t)``; the events are disjoint in y."""
    if T < 1:
        raise ValidationError("horizon must be at least 1")
    xi = chain.index(x)
    H, _ = hitting_table(chain, T, starts=[xi])
    return SurprisePmf(xi, int(T), _ro(H[0].sum(axis=0)))


def stationary_hitting_pmf(chain: ChainSpec, y, T: int, pi=None) -> HittingPmf:
    """``P_pi(tau(y) = t)``; non-increasing in t >= 1 and at most 1/t."""
    if pi is None:
        pi = stationary(chain)
    return hitting_pmf_from(chain, np.asarray(getattr(pi, "pi", pi)), y, T)


# -- linear-solve oracles ----------------------------------------------------


def _avoiding_reach(chain, xi, yi):
    """States reachable from x without passing through y (y excluded)."""
    if xi == yi:
        return []
    seen = {xi}
    order = [xi]
    queue = deque([xi])
    while queue:
        s = queue.popleft()
        for j, _ in chain.rows[s]:
            if j != yi and j not in seen:
                seen.add(j)
                order.append(j)
                queue.append(j)
    return sorted(order)


def _can_reach(chain, sources, target):
    """Boolean mask of states from which ``target`` is reachable."""
    rev = chain.matrix.T.tocsr()
    ok = np.zeros(chain.n, dtype=bool)
    ok[target] = True
    queue = deque([target])
    while queue:
        s = queue.popleft()
        for j in rev.indices[rev.indptr[s] : rev.indptr[s + 1]]:
            if not ok[j]:
                ok[j] = True
                queue.append(j)
    return ok


def _hitting_system(chain, x, y):
    xi, yi = chain.index(x), chain.index(y)
    R = _avoiding_reach(chain, xi, yi)
    if not R:
        return xi, yi, R, None
    ok = _can_reach(chain, R, yi)
    bad = [s for s in R if not ok[s]]
    if bad:
        raise Unreachable(f"state {chain.states[bad[0]]!r} is reachable but cannot reach the target")
    Q = chain.matrix[R][:, R]
    A = sp.identity(len(R), format="csc") - Q.tocsc()
    return xi, yi, R, A


def _solve(A, b):
    if A.shape[0] <= 2000:
        return scipy.linalg.solve(A.toarray(), b)
    return spla.spsolve(A, b)


def expected_hitting(chain: ChainSpec, x, y) -> float:
    """``E_x tau(y)`` from ``h(y) = 0, h(z) = 1 + sum_w p(z,w) h(w)``."""
    xi, yi, R, A = _hitting_system(chain, x, y)
    if not R:
        return 0.0
    h = _solve(A, np.ones(len(R)))
    return float(h[R.index(xi)])


def hitting_moments(chain: ChainSpec, x, y):
    """Exact ``(mean, variance)`` of ``tau(y)`` from x.

    The second moment solves ``m2 = 1 + 2 P h + P m2`` on the same system.
    """
    xi, yi, R, A = _hitting_system(chain, x, y)
    if not R:
        return 0.0, 0.0
    ones = np.ones(len(R))
    h = _solve(A, ones)
    Q = chain.matrix[R][:, R]
    m2 = _solve(A, ones + 2.0 * (Q @ h))
    k = R.index(xi)
    return float(h[k]), float(m2[k] - h[k] ** 2)


# -- sampling ----------------------------------------------------------------


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Per-sample Philox stream: key ``seed``, counter block ``index``.

    Streams for distinct indices are disjoint blocks of 2**128 draws, so
    sample ``i`` consumes the same uniforms regardless of how many samples
    run or in which order.
    """
    return np.random.Generator(np.random.Philox(counter=[0, 0, int(index), 0], key=int(seed)))


def sample_path(chain: ChainSpec, x, y, seed: int, cap: int = DEFAULT_CAP, chunk: int = 1024) -> SampledPath:
    """Simulate from x until y is hit or ``cap`` steps elapse."""
    if cap < 1:
        raise ValidationError("cap must be at least 1")
    xi, yi = chain.index(x), chain.index(y)
    rng = stream(seed)
    pieces = [np.array([xi], dtype=np.int64)]
    s, steps = xi, 0
    hit = xi == yi
    while not hit and steps < cap:
        u = rng.random(min(chunk, cap - steps))
        path, hit = kernels.walk_path(chain.indptr, chain.indices, chain.cum, s, yi, u)
        pieces.append(path[1:])
        steps += len(path) - 1
        s = int(path[-1])
        chunk = min(chunk * 2, 1 << 20)
    return SampledPath(np.concatenate(pieces), not hit)


def sample_hitting_times(chain: ChainSpec, x, y, samples: int, seed: int, cap: int = DEFAULT_CAP):
    """Independent hitting times of y from x, sample ``i`` on ``stream(seed, i)``.

    Returns ``(times, truncated)``; truncated samples carry ``times == cap``.
    """
    xi, yi = chain.index(x), chain.index(y)
    gens = [stream(seed, i) for i in range(samples)]
    state = np.full(samples, xi, dtype=np.int64)
    times = np.zeros(samples, dtype=np.int64)
    reached = np.full(samples, xi == yi)
    chunk = 256
    while True:
        live = np.flatnonzero(~reached & (times < cap))
        if live.size == 0:
            break
        width = int(min(chunk, cap - times[live].min()))
        budget = np.minimum(width, cap - times[live])
        U = np.full((live.size, width), 2.0)
        for r, i in enumerate(live):
            U[r, : budget[r]] = gens[i].random(int(budget[r]))
        out, used, hit = kernels.walk(chain.indptr, chain.indices, chain.cum, state[live], yi, U)
        # steps past a walker's budget ran on padding and are discarded
        real = hit & (used <= budget)
        state[live] = out
        times[live] += np.minimum(used, budget)
        reached[live[real]] = True
        chunk = min(chunk * 2, 1 << 16)
    return times, ~reached


def mc_hitting_moments(chain: ChainSpec, x, y, samples: int, seed: int, cap: int = DEFAULT_CAP) -> MomentEstimate:
    """Sample mean and variance of ``tau(y)``; any truncated sample poisons
    the estimate (raises ``CapExceeded``) rather than censoring it."""
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    times, truncated = sample_hitting_times(chain, x, y, samples, seed, cap)
    if truncated.any():
        raise CapExceeded(f"{int(truncated.sum())} of {samples} samples hit the cap {cap}")
    t = times.astype(np.float64)
    mean = float(t.mean())
    var = float(t.var(ddof=1))
    return MomentEstimate(mean, var, samples, 1.96 * math.sqrt(var / samples), int(seed))


def loop_erase(path):
    """Chronological loop erasure of a path ending at its hitting target.

    ``w_0 = z_0``; ``k_i`` is the last index of z visiting any of
    ``w_0..w_i``; ``w_{i+1} = z_{k_i + 1}`` until ``k_i`` reaches the end.
    """
    z = list(path)
    if not z:
        raise ValidationError("path must be non-empty")
    last = {}
    for idx, s in enumerate(z):
        last[s] = idx
    out = [z[0]]
    k = last[z[0]]
    end = len(z) - 1
    while k < end:
        nxt = z[k + 1]
        out.append(nxt)
        k = max(k, last[nxt])
    return out
