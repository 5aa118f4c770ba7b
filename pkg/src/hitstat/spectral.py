"""Spectral decomposition of the return probability of a killed chain.

For a chain that is reversible on the states it can use before being killed
at ``U``, ``P_x(X_t = x, tau(U) > t) = sum_i a_i lam_i^t`` with ``a_i >= 0``:
symmetrize the killed matrix with the square root of a reversing measure,
diagonalize it, and read ``a_i`` off as the squared x-coordinate of each
orthonormal eigenvector.
"""

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.csgraph as csgraph

from . import kernels
from .chain import ChainSpec, communicating_classes, is_reversible, restrict, stationary
from .errors import BadParams, HitstatError, NotIrreducible, NotReversible, StateInU

DENSE_LIMIT = 2000
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True, eq=False)
class KilledSpectrum:
    """``terms`` holds ``(a_i, lam_i)`` sorted by decreasing ``lam_i``.

    ``near_degenerate`` counts adjacent eigenvalue gaps below 1e-9; inside
    such clusters individual terms depend on the eigenbasis the solver
    picked, only the reconstructed function is basis-free.
    """

    x: int
    U: tuple
    terms: tuple
    nonneg_eigen: bool
    near_degenerate: int = 0

    @property
    def coefficients(self):
        return np.array([a for a, _ in self.terms])

    @property
    def eigenvalues(self):
        return np.array([lam for _, lam in self.terms])

    def to_dict(self):
        return {"terms": [[a, lam] for a, lam in self.terms], "nonneg_eigen": self.nonneg_eigen}

    def to_json(self):
        return json.dumps(self.to_dict())


def _index_set(chain, U):
    return tuple(sorted({chain.index(u) for u in U}))


def _killed_class(chain, xi, Uset):
    """States that x can reach and return from while avoiding U."""
    alive = np.ones(chain.n, dtype=bool)
    alive[list(Uset)] = False
    keep = np.flatnonzero(alive)
    M = chain.matrix[keep][:, keep]
    _, labels = csgraph.connected_components(M, directed=True, connection="strong")
    pos = int(np.flatnonzero(keep == xi)[0])
    return keep[labels == labels[pos]]


def _reversing_measure(chain, C):
    """Detailed-balance weights on ``C`` built along a BFS tree from C[0]."""
    pos = {int(s): k for k, s in enumerate(C)}
    P = chain.matrix
    mu = np.zeros(len(C))
    mu[0] = 1.0
    seen = np.zeros(len(C), dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        k = queue.popleft()
        i = int(C[k])
        for j, pij in chain.rows[i]:
            if j not in pos:
                continue
            pji = P[j, i]
            if pji == 0.0:
                raise NotReversible(f"p({i},{j}) > 0 but p({j},{i}) = 0")
            kj = pos[j]
            if not seen[kj]:
                seen[kj] = True
                mu[kj] = mu[k] * pij / pji
                queue.append(kj)
    mu /= math.fsum(mu)
    F = mu[:, None] * P[C][:, C].toarray()
    if np.max(np.abs(F - F.T)) > 1e-10 * mu.max():
        raise NotReversible("killed chain violates detailed balance")
    return mu


def _class_eigen_nonneg(chain, xi, strict_pi):
    labels, _ = communicating_classes(chain)
    cls = np.flatnonzero(labels == labels[xi])
    if strict_pi is not None:
        vals = scipy.linalg.eigvalsh(_sym(chain, cls, strict_pi[cls]))
    else:
        vals = np.linalg.eigvals(chain.matrix[cls][:, cls].toarray()).real
    return bool(vals.min() >= -1e-12)


def _sym(chain, C, w):
    Q = chain.matrix[C][:, C].toarray()
    r = np.sqrt(w)
    A = r[:, None] * Q / r[None, :]
    return 0.5 * (A + A.T)


def killed_spectrum(chain: ChainSpec, x, U, strict: bool = True) -> KilledSpectrum:
    """Spectral form of ``P_x(X_t = x, tau(U) > t)``.

    With ``strict`` the communicating class of x must be closed and
    reversible (``NotIrreducible`` / ``NotReversible`` otherwise). Without
    it only detailed balance on the killed class of x is required, which
    covers transient pieces such as the holding states of a pure-birth chain.
    """
    xi = chain.index(x)
    Uset = _index_set(chain, U)
    if xi in Uset:
        raise StateInU(f"start {chain.states[xi]!r} lies in U")
    strict_pi = None
    if strict:
        labels, closed = communicating_classes(chain)
        if not closed[labels[xi]]:
            raise NotIrreducible(f"class of {chain.states[xi]!r} is not closed")
        cls = np.flatnonzero(labels == labels[xi])
        sub = restrict(chain, cls)
        try:
            pi_sub = stationary(sub).pi
        except HitstatError as exc:  # pragma: no cover - closed class has one
            raise NotIrreducible(str(exc)) from None
        if not is_reversible(sub, pi_sub, 1e-12):
            raise NotReversible(f"class of {chain.states[xi]!r} violates detailed balance")
        strict_pi = np.zeros(chain.n)
        strict_pi[cls] = pi_sub
    C = _killed_class(chain, xi, Uset)
    if len(C) > DENSE_LIMIT:
        raise BadParams(f"killed class has {len(C)} states; dense eigensolve limit is {DENSE_LIMIT}")
    w = strict_pi[C] if strict_pi is not None else _reversing_measure(chain, C)
    vals, vecs = scipy.linalg.eigh(_sym(chain, C, w))
    k = int(np.flatnonzero(C == xi)[0])
    a = vecs[k, :] ** 2
    order = np.argsort(-vals, kind="stable")
    terms = tuple((float(a[i]), float(vals[i])) for i in order)
    degenerate = int(np.sum(np.diff(vals) < DEGENERACY_GAP)) if len(vals) > 1 else 0
    return KilledSpectrum(
        xi, Uset, terms, _class_eigen_nonneg(chain, xi, strict_pi), degenerate
    )


def killed_return_prob_all(chain: ChainSpec, x, U, T: int) -> np.ndarray:
    """DP values of ``P_x(X_t = x, tau(U) > t)`` for t = 0..T."""
    xi = chain.index(x)
    Uset = _index_set(chain, U)
    if xi in Uset:
        raise StateInU(f"start {chain.states[xi]!r} lies in U")
    alive = np.ones(chain.n, dtype=bool)
    alive[list(Uset)] = False
    V0 = np.zeros((1, chain.n))
    V0[0, xi] = 1.0
    return kernels.killed_trace(*chain.csr, V0, alive, np.array([xi], dtype=np.int64), int(T))[0]


def killed_return_prob(chain: ChainSpec, x, U, t: int) -> float:
    return float(killed_return_prob_all(chain, x, U, t)[t])


def reconstruct(spectrum: KilledSpectrum, t):
    """``sum_i a_i lam_i^t``; ``t`` may be an integer or an integer array."""
    a = spectrum.coefficients
    lam = spectrum.eigenvalues
    t = np.asarray(t)
    out = (a[:, None] * lam[:, None] ** t.reshape(-1)[None, :]).sum(axis=0)
    return float(out[0]) if t.ndim == 0 else out


def spectrum_to_mixture(spectrum: KilledSpectrum):
    """Geometric mixture for the length of an excursion from x.

    An excursion of length t has probability proportional to
    ``sum_i a_i lam_i^t``, so it is a mixture of geometrics with failure
    probability ``lam_i`` and weight proportional to ``a_i / (1 - lam_i)``.
    Requires ``0 <= lam_i < 1`` on every term carrying weight.
    """
    comps = []
    for a, lam in spectrum.terms:
        if a <= 1e-15:
            continue
        if not -1e-12 <= lam < 1.0:
            raise BadParams(f"eigenvalue {lam!r} cannot be a geometric parameter")
        lam = max(lam, 0.0)
        comps.append((a / (1.0 - lam), lam))
    total = math.fsum(w for w, _ in comps)
    comps = [(w / total, q) for w, q in comps]
    # renormalize once more so fsum of weights is 1 to rounding
    drift = 1.0 - math.fsum(w for w, _ in comps)
    w0, q0 = comps[0]
    comps[0] = (w0 + drift, q0)
    return comps
