"""Maximal transition probabilities ``p*(x, y) = sup_t p^t(x, y)``.

Running maxima over ``t <= T`` are exact lower bounds on the supremum. For a
reversible chain whose communicating class of ``x`` is closed, the spectral
estimate ``|p^t(x,y) - pi(y)| <= sqrt(pi(y)/pi(x)) * lam^t`` (``lam`` the
largest non-trivial eigenvalue modulus) bounds what happens after ``T``; when
that tail is below ``1e-12`` the row is *certified*.
"""

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .chain import ChainSpec, communicating_class, is_reversible, restrict, stationary, symmetrized
from .errors import HitstatError, Uncertifiable

CERT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MaximalRow:
    """``argmax_t[y]`` is the first time the maximum is attained, or -1 when
    the certified supremum is the stationary limit ``pi(y)``."""

    x: int
    horizon: int
    pstar: np.ndarray
    argmax_t: np.ndarray
    certified: bool
    tail_eps: Optional[float]
    pstar_even: np.ndarray
    pstar_odd: np.ndarray
    lambda_star: Optional[float] = None

    @property
    def total(self):
        return float(math.fsum(self.pstar))

    def to_csv(self):
        buf = io.StringIO()
        buf.write("y,pstar,argmax_t,certified,tail_eps\n")
        eps = "" if self.tail_eps is None else repr(self.tail_eps)
        for y in range(len(self.pstar)):
            buf.write(f"{y},{float(self.pstar[y])!r},{self.argmax_t[y]},{int(self.certified)},{eps}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class SpectralInfo:
    """Stationary law and eigenvalue data of the class of ``x`` (embedded in
    the full state space; zero off the class)."""

    support: np.ndarray
    pi: np.ndarray
    lambda_star: float
    eigenvalues: np.ndarray


def spectral_info(chain: ChainSpec, x) -> Optional[SpectralInfo]:
    """``None`` unless the class of x is closed and reversible."""
    xi = chain.index(x)
    cls = communicating_class(chain, xi)
    members = set(cls.tolist())
    for s in cls:
        if any(j not in members for j, _ in chain.rows[s]):
            return None
    sub = restrict(chain, cls)
    try:
        pi_sub = stationary(sub).pi
    except HitstatError:
        return None
    if not is_reversible(sub, pi_sub, 1e-12):
        return None
    vals = scipy.linalg.eigvalsh(symmetrized(sub, pi_sub))
    lam = 0.0 if len(vals) == 1 else max(abs(vals[0]), abs(vals[-2]))
    pi = np.zeros(chain.n)
    pi[cls] = pi_sub
    return SpectralInfo(cls, pi, float(min(lam, 1.0)), vals)


def _tail_bound(info, xi, T):
    scale = np.sqrt(info.pi[info.support] / info.pi[xi]).max()
    if info.lambda_star == 0.0:
        return 0.0 if T > 0 else float(scale)
    return float(scale * info.lambda_star**T)


def certifying_horizon(chain: ChainSpec, x, eps: float = CERT_TOL, info=None) -> Optional[int]:
    """Smallest T whose spectral tail bound is at most ``eps`` (None if the
    chain cannot be certified)."""
    xi = chain.index(x)
    info = info if info is not None else spectral_info(chain, xi)
    if info is None or info.lambda_star >= 1.0 - 1e-12:
        return None
    if info.lambda_star == 0.0:
        return 1
    scale = np.sqrt(info.pi[info.support] / info.pi[xi]).max()
    T = max(1, math.ceil(math.log(eps / scale) / math.log(info.lambda_star)))
    while _tail_bound(info, xi, T) > eps:
        T += 1
    return T


def running_maxima(chain: ChainSpec, starts, T: int):
    """Even/odd running maxima of ``p^t(x, .)`` for each start, t <= T."""
    starts = np.asarray(starts, dtype=np.int64)
    k = len(starts)
    V = np.zeros((k, chain.n))
    V[np.arange(k), starts] = 1.0
    emax = np.zeros((k, chain.n))
    omax = np.zeros((k, chain.n))
    earg = np.full((k, chain.n), -1, dtype=np.int64)
    oarg = np.full((k, chain.n), -1, dtype=np.int64)
    kernels.running_max(*chain.csr, V, int(T), 0, emax, omax, earg, oarg)
    # a maximum of 0 is first attained at t = 0 (even) or t = 1 (odd)
    earg[earg < 0] = 0
    if T >= 1:
        oarg[oarg < 0] = 1
    return emax, omax, earg, oarg


def _combine(emax, omax, earg, oarg):
    # -1 marks the stationary limit, which comes after every finite time
    late = np.iinfo(np.int64).max
    e_t = np.where(earg < 0, late, earg)
    o_t = np.where(oarg < 0, late, oarg)
    use_odd = (omax > emax) | ((omax == emax) & (o_t < e_t))
    return np.where(use_odd, omax, emax), np.where(use_odd, oarg, earg)


def maximal_row(chain: ChainSpec, x, T: int, info=None) -> MaximalRow:
    if T < 1:
        raise ValueError("horizon must be at least 1")
    xi = chain.index(x)
    emax, omax, earg, oarg = (a[0] for a in running_maxima(chain, [xi], T))
    info = info if info is not None else spectral_info(chain, xi)
    certified = False
    tail_eps = None
    lam = None
    if info is not None:
        lam = info.lambda_star
        if lam < 1.0 - 1e-12:
            tail_eps = _tail_bound(info, xi, T)
            certified = tail_eps <= CERT_TOL
    if certified:
        limit = info.pi
        earg = np.where(limit > emax, -1, earg)
        oarg = np.where(limit > omax, -1, oarg)
        emax = np.maximum(emax, limit)
        omax = np.maximum(omax, limit)
    pstar, arg = _combine(emax, omax, earg, oarg)
    return MaximalRow(xi, int(T), pstar, arg, certified, tail_eps, emax, omax, lam)


def maximal_row_sum(chain: ChainSpec, x, T: int) -> float:
    """``sum_y pstar[y]``; a lower bound on the true sum, within
    ``n * tail_eps`` of it when certified."""
    return maximal_row(chain, x, T).total


@dataclass(frozen=True)
class StarrResult:
    ratio: float
    bound: float
    p_exp: float
    horizon: int
    certified: bool
    tail_eps: float


def starr_check(chain: ChainSpec, x, p_exp: float, T: Optional[int] = None) -> StarrResult:
    """Even-time maximal inequality with ``f`` the indicator of ``x``.

    ``g(y) = sup_{k <= T} (P^{2k} f)(y)`` and the returned ratio is
    ``||g||_{p,pi} / ||f||_{p,pi}``, to be compared with ``p/(p-1)``.
    """
    if p_exp <= 1:
        raise ValueError("p_exp must exceed 1")
    xi = chain.index(x)
    info = spectral_info(chain, xi)
    if info is None:
        raise Uncertifiable("class of x is not closed and reversible")
    if info.lambda_star >= 1.0 - 1e-12:
        raise Uncertifiable(f"largest non-trivial eigenvalue modulus {info.lambda_star!r} is 1")
    sub = restrict(chain, info.support)
    pi = info.pi[info.support]
    x_sub = int(np.flatnonzero(info.support == xi)[0])
    scale = float(np.sqrt(pi[x_sub] / pi).max())
    if T is None:
        if info.lambda_star == 0.0:
            T = 1
        else:
            T = max(1, math.ceil(math.log(1e-14) / (2 * math.log(info.lambda_star))))
            while scale * info.lambda_star ** (2 * T) > CERT_TOL:
                T += 1
    tail = scale * info.lambda_star ** (2 * T) if info.lambda_star > 0 else 0.0
    certified = tail <= CERT_TOL
    f = np.zeros(sub.n)
    f[x_sub] = 1.0
    g = kernels.column_even_sup(*sub.csr, f, int(T))
    if certified:
        g = np.maximum(g, pi[x_sub])
    num = math.fsum(pi * g**p_exp) ** (1.0 / p_exp)
    den = pi[x_sub] ** (1.0 / p_exp)
    return StarrResult(num / den, p_exp / (p_exp - 1.0), float(p_exp), int(T), certified, float(tail))


def starr_ratio(chain: ChainSpec, x, p_exp: float, T: Optional[int] = None) -> float:
    return starr_check(chain, x, p_exp, T).ratio
