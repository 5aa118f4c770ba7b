"""Locate a time with large surprise probability from a hitting window.

If every path from x into U passes through y, then for any ``N > 0`` some
``s`` in ``[t, t + 2N)`` has

    P_x(S_s) >= P_x(t <= tau(y) < t + N) * E_y[Z_N] / (2N),

where ``Z_N`` counts distinct states of U visited at times ``0..N-1``.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..chain import ChainSpec
from ..errors import HorizonTooSmall, PreconditionFailed, ValidationError
from ..hitting import hitting_pmf, hitting_table, stream, surprise_pmf

Z99 = 2.5758293035489004
TAIL_TOL = 1e-6


@dataclass(frozen=True)
class LocatorResult:
    s: int
    lhs: float
    rhs: float
    window_mass: float
    expected_new: float
    t: int
    N: int
    method: str
    ci_halfwidth: float = 0.0

    @property
    def passed(self):
        return self.lhs >= self.rhs - 1e-12

    def to_dict(self):
        return {
            "s": self.s,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "window_mass": self.window_mass,
            "expected_new": self.expected_new,
            "t": self.t,
            "N": self.N,
            "method": self.method,
            "ci_halfwidth": self.ci_halfwidth,
            "pass": self.passed,
        }


def _check_precondition(chain, xi, yi, U):
    """BFS from x with y deleted must not touch U."""
    if xi in U and xi != yi:
        raise PreconditionFailed("x itself lies in U")
    if xi == yi:
        return
    seen = {xi}
    queue = deque([xi])
    while queue:
        s = queue.popleft()
        for j, _ in chain.rows[s]:
            if j == yi or j in seen:
                continue
            if j in U:
                raise PreconditionFailed(
                    f"state {chain.states[j]!r} of U is reachable from x without passing y"
                )
            seen.add(j)
            queue.append(j)


def expected_new_exact(chain: ChainSpec, y, U, N: int) -> float:
    """``E_y[Z_N] = sum_{u in U} P_y(tau(u) <= N - 1)`` by linearity."""
    H, _ = hitting_table(chain, N - 1, starts=[y], targets=sorted(U))
    return float(math.fsum(H[0].sum(axis=1)))


def expected_new_mc(chain: ChainSpec, y, U, N: int, samples: int, seed: int):
    """Monte Carlo ``(mean, halfwidth)`` of ``Z_N`` with a 99% normal CI."""
    Uset = set(U)
    counts = np.empty(samples)
    for i in range(samples):
        counts[i] = _mc_count(chain, y, Uset, N, seed, i)
    mean = float(counts.mean())
    half = Z99 * float(counts.std(ddof=1)) / math.sqrt(samples) if samples > 1 else math.inf
    return mean, half


def _mc_count(chain, y, Uset, N, seed, index):
    rng = stream(seed, index)
    u = rng.random(max(N - 1, 0))
    s = chain.index(y)
    seen = {s} & Uset
    for k in range(N - 1):
        lo, hi = chain.indptr[s], chain.indptr[s + 1]
        cum = chain.cum[lo:hi]
        j = min(int(np.count_nonzero(cum <= u[k])), hi - lo - 1)
        s = int(chain.indices[lo + j])
        if s in Uset:
            seen.add(s)
    return len(seen)


def best_window(chain: ChainSpec, x, y, N: int, T: Optional[int] = None):
    """Start ``t`` maximizing ``P_x(t <= tau(y) < t + N)`` (first maximizer).

    ``T`` defaults to a doubling search until the hitting tail drops below
    1e-6. Returns ``(t, mass)``.
    """
    if T is None:
        T = max(4 * N, 64)
        while True:
            res = hitting_pmf(chain, x, y, T)
            if res.tail <= TAIL_TOL:
                break
            if T > 10**7:
                raise HorizonTooSmall(f"hitting tail {res.tail:.3g} still above {TAIL_TOL} at T={T}")
            T *= 2
    else:
        res = hitting_pmf(chain, x, y, T)
    c = np.concatenate([[0.0], np.cumsum(res.pmf)])
    starts = np.arange(0, T - N + 2)
    mass = c[starts + N] - c[starts]
    k = int(np.argmax(mass))
    return int(starts[k]), float(mass[k])


def surprise_lower_locator(
    chain: ChainSpec,
    x,
    y,
    U,
    N: int,
    t: Optional[int] = None,
    method: str = "exact",
    samples: int = 2000,
    seed: int = 0,
) -> LocatorResult:
    """Evaluate the window inequality and return the best ``s``.

    ``t=None`` picks the window start with the largest hitting mass.
    ``method="mc"`` estimates ``E_y[Z_N]`` by simulation and compares
    against the lower end of its 99% confidence interval.
    """
    if N < 1:
        raise ValidationError("N must be positive")
    xi, yi = chain.index(x), chain.index(y)
    Ui = {chain.index(u) for u in U}
    _check_precondition(chain, xi, yi, Ui)
    if t is None:
        t, _ = best_window(chain, xi, yi, N)
    hp = hitting_pmf(chain, xi, yi, t + N - 1)
    mass = float(math.fsum(hp.pmf[t : t + N]))
    half = 0.0
    if method == "exact":
        ez = expected_new_exact(chain, yi, Ui, N)
        ez_used = ez
    elif method == "mc":
        ez, half = expected_new_mc(chain, yi, Ui, N, samples, seed)
        ez_used = max(ez - half, 0.0)
    else:
        raise ValidationError(f"unknown method {method!r}")
    rhs = mass * ez_used / (2 * N)
    sp = surprise_pmf(chain, xi, t + 2 * N - 1).s
    window = sp[t : t + 2 * N]
    k = int(np.argmax(window))
    return LocatorResult(t + k, float(window[k]), float(rhs), mass, float(ez), int(t), int(N), method, half)
