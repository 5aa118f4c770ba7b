"""Sums of independent geometric random variables.

Geometric convention: ``P(X = k) = p (1 - p)^k = (1 - q) q^k`` for k >= 0.

The negative-binomial pmf is evaluated with Loader's saddle-point form
(Stirling remainders plus binomial deviance), which keeps the relative error
near machine precision even when ``m + n`` is in the millions and the naive
log-factorial difference would cancel catastrophically.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import BadParams, BadWeights

# log(k!) - log(sqrt(2 pi k) (k/e)^k) for k = 0..15
_STIRLERR = (
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
)
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
_LOG_2PI = math.log(2 * math.pi)


def stirlerr(k: int) -> float:
    if k <= 15:
        return _STIRLERR[k]
    kk = float(k) * k
    if k > 500:
        return (_S0 - _S1 / kk) / k
    if k > 80:
        return (_S0 - (_S1 - _S2 / kk) / kk) / k
    if k > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / kk) / kk) / kk) / k
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / kk) / kk) / kk) / kk) / k


def bd0(x: float, mu: float) -> float:
    """Deviance term ``x log(x/mu) + mu - x`` without cancellation."""
    if abs(x - mu) < 0.1 * (x + mu):
        v = (x - mu) / (x + mu)
        s = (x - mu) * v
        ej = 2 * x * v
        v *= v
        j = 1
        while True:
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / mu) + mu - x


def log_binom_pmf(x: int, n: int, p: float) -> float:
    """``log( C(n, x) p^x (1-p)^(n-x) )``."""
    q = 1.0 - p
    if p == 0.0:
        return 0.0 if x == 0 else -math.inf
    if q == 0.0:
        return 0.0 if x == n else -math.inf
    if x == 0:
        return -bd0(n, n * q) - n * p if p < 0.1 else n * math.log(q)
    if x == n:
        return -bd0(n, n * p) - n * q if q < 0.1 else n * math.log(p)
    lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q)
    lf = _LOG_2PI + math.log(x) + math.log1p(-x / n)
    return lc - 0.5 * lf


def log_neg_binomial_pmf(count: int, m: int, p: float) -> float:
    """``log P(X_1 + ... + X_count = m)`` for i.i.d. geometrics of parameter p."""
    if count < 1 or m < 0 or not 0.0 < p <= 1.0:
        raise BadParams(f"need count >= 1, m >= 0, p in (0, 1]; got {count}, {m}, {p}")
    if m == 0:
        return count * math.log(p)
    # C(m+count-1, count-1) = count/(m+count) * C(m+count, count)
    return math.log(count / (m + count)) + log_binom_pmf(count, m + count, p)


def neg_binomial_pmf(count: int, m: int, p: float) -> float:
    return math.exp(log_neg_binomial_pmf(count, m, p))


def basic_geom_bounds(n: int, m: int):
    """Bracket ``(1/3, 1/2) * sqrt(n / (m (m+n)))`` for the i.i.d. sum at
    ``m`` with parameter ``n/(m+n)``."""
    if n < 1 or m < 1:
        raise BadParams("need n >= 1 and m >= 1")
    root = math.sqrt(n / (m * (m + n)))
    return root / 3.0, root / 2.0


def log_binom_bounds(M: int, N: int):
    """Log of the Stirling bracket around ``C(M+N, M)``.

    Accepts scalars or broadcastable integer arrays.
    """
    scalar = np.ndim(M) == 0 and np.ndim(N) == 0
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if np.any(M < 1) or np.any(N < 1):
        raise BadParams("need M >= 1 and N >= 1")
    s = M + N
    core = 0.5 * np.log(s / (M * N)) + s * np.log(s) - M * np.log(M) - N * np.log(N)
    lo, hi = core - math.log(3.0), core - math.log(2.0)
    if scalar:
        return float(lo), float(hi)
    return lo, hi


def binom_bounds(M: int, N: int):
    """``(lower, upper)`` around ``C(M+N, M)``; may overflow to inf for huge
    arguments, use :func:`log_binom_bounds` there."""
    lo, hi = log_binom_bounds(M, N)
    with np.errstate(over="ignore"):
        lo, hi = np.exp(lo), np.exp(hi)
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def stirling_ratio(N):
    """``N! / (N^(N+1/2) e^-N)``, which lies in ``[sqrt(2 pi), sqrt(2 pi) e^(1/12)]``."""
    N = np.asarray(N, dtype=np.float64)
    return np.exp(gammaln(N + 1) - (N + 0.5) * np.log(N) + N)


@dataclass(frozen=True)
class GeomParams:
    q: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        for v in q:
            if not 0.0 <= v < 1.0:
                raise BadParams(f"failure probability {v!r} outside [0, 1)")
        object.__setattr__(self, "q", q)

    @property
    def n(self):
        return len(self.q)


def _as_q(params):
    return params.q if isinstance(params, GeomParams) else GeomParams(tuple(params)).q


def geom_sum_pmf_all(params, T: int) -> np.ndarray:
    """``P(X_1 + ... + X_n = t)`` for t = 0..T, by convolving one variable at
    a time (``g[s] = (1-q) f[s] + q g[s-1]``)."""
    f = np.zeros(T + 1)
    f[0] = 1.0
    for q in _as_q(params):
        g = np.empty_like(f)
        prev = 0.0
        for s in range(T + 1):
            prev = (1.0 - q) * f[s] + q * prev
            g[s] = prev
        f = g
    return f


def geom_sum_pmf(params, t: int) -> float:
    if t < 0:
        raise BadParams("t must be non-negative")
    return float(geom_sum_pmf_all(params, t)[t])


def geom_sum_bound(n: int, t: int) -> float:
    """``(1/2) sqrt(n / (t (t + n)))``."""
    if t < 1:
        raise BadParams("t must be at least 1")
    return 0.5 * math.sqrt(n / (t * (t + n)))


def _pmf_batch(Q, t):
    """Row-wise sum pmf at t for a batch of parameter vectors ``Q`` (b, n)."""
    b, n = Q.shape
    f = np.zeros((b, t + 1))
    f[:, 0] = 1.0
    for i in range(n):
        q = Q[:, i]
        g = np.empty_like(f)
        prev = np.zeros(b)
        for s in range(t + 1):
            prev = (1.0 - q) * f[:, s] + q * prev
            g[:, s] = prev
        f = g
    return f[:, t]


def geom_sum_max_search(n: int, t: int, resolution: float):
    """Grid maximum of the sum pmf at ``t`` over ``q`` in ``[0, 1)^n``.

    Grid points are ``k * resolution``; ties resolve to the first point in
    lexicographic order. Returns ``(GeomParams, value)``.
    """
    if n not in (2, 3):
        raise BadParams("grid search supports n in {2, 3}")
    if resolution > 1e-2 or resolution <= 0:
        raise BadParams("resolution must be in (0, 1e-2]")
    k = int(round(1.0 / resolution))
    grid = np.arange(k) * resolution
    grid = grid[grid < 1.0]
    rest = np.stack(np.meshgrid(*([grid] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    best, best_q = -1.0, None
    for q1 in grid:
        Q = np.column_stack([np.full(len(rest), q1), rest])
        vals = _pmf_batch(Q, t)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_q = float(vals[i]), Q[i]
    return GeomParams(tuple(best_q)), best


def _check_weights(comps):
    comps = [(float(w), float(q)) for w, q in comps]
    if not comps:
        raise BadWeights("empty mixture")
    ws = [w for w, _ in comps]
    if min(ws) < 0 or abs(math.fsum(ws) - 1.0) > 1e-12:
        raise BadWeights(f"mixture weights {ws} must be non-negative and sum to 1")
    for _, q in comps:
        if not 0.0 <= q < 1.0:
            raise BadParams(f"failure probability {q!r} outside [0, 1)")
    return comps


def geom_mixture_pmf_all(mixtures, T: int) -> np.ndarray:
    """Pmf of a sum of independent geometric mixtures, t = 0..T.

    ``mixtures[i]`` is a list of ``(weight, q)`` components for variable i.
    Independence makes this the component-averaged pmf of the plain sum.
    """
    ks = np.arange(T + 1)
    f = np.zeros(T + 1)
    f[0] = 1.0
    for comps in mixtures:
        comps = _check_weights(comps)
        law = np.zeros(T + 1)
        for w, q in comps:
            law += w * (1.0 - q) * q**ks
        f = np.convolve(f, law)[: T + 1]
    return f


def geom_mixture_pmf(mixtures, t: int) -> float:
    return float(geom_mixture_pmf_all(mixtures, t)[t])
