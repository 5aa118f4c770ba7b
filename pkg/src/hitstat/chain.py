"""Finite Markov chains: representation, validation, stationarity,
reversibility and total-variation mixing."""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from . import kernels
from .errors import (
    BadIndex,
    DuplicateLabel,
    HorizonTooSmall,
    NegativeEntry,
    NotUnique,
    RowSumError,
    ValidationError,
)

ROW_SUM_TOL = 1e-12
DENSE_LIMIT = 2000


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Row-stochastic transition structure over ``n`` labelled states.

    ``rows[i]`` is a tuple of ``(j, p)`` pairs sorted by ``j`` with ``p > 0``.
    Construction validates; use :func:`validate` to coerce JSON-like input.
    """

    n: int
    states: tuple
    rows: tuple
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError(f"n must be a positive integer, got {n!r}")
        states = tuple(str(s) for s in self.states) if self.states else tuple(
            str(i) for i in range(n)
        )
        if len(states) != n:
            raise ValidationError(f"{len(states)} labels for {n} states")
        if len(set(states)) != n:
            seen = set()
            dup = next(s for s in states if s in seen or seen.add(s))
            raise DuplicateLabel(f"duplicate state label {dup!r}")
        if len(self.rows) != n:
            raise ValidationError(f"{len(self.rows)} rows for {n} states")
        rows = []
        for i, raw in enumerate(self.rows):
            items = raw.items() if isinstance(raw, Mapping) else raw
            entries = {}
            for j, p in items:
                j = int(j)
                p = float(p)
                if not 0 <= j < n:
                    raise BadIndex(f"row {i}: target index {j} outside [0, {n})")
                if j in entries:
                    raise BadIndex(f"row {i}: target index {j} listed twice")
                if not math.isfinite(p) or p < 0:
                    raise NegativeEntry(f"row {i}: entry p({i},{j}) = {p!r}")
                entries[j] = p
            total = math.fsum(entries.values())
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise RowSumError(f"row {i} sums to {total!r}")
            rows.append(tuple((j, entries[j]) for j in sorted(entries) if entries[j] > 0))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rows", tuple(rows))
        object.__setattr__(
            self, "metadata", MappingProxyType({str(k): str(v) for k, v in dict(self.metadata).items()})
        )

    # -- array views -------------------------------------------------------

    @cached_property
    def indptr(self):
        return _frozen(np.cumsum([0] + [len(r) for r in self.rows], dtype=np.int64))

    @cached_property
    def indices(self):
        return _frozen(np.array([j for r in self.rows for j, _ in r], dtype=np.int64))

    @cached_property
    def data(self):
        return _frozen(np.array([p for r in self.rows for _, p in r], dtype=np.float64))

    @cached_property
    def cum(self):
        """Per-row cumulative probabilities, used by the samplers."""
        out = np.empty_like(self.data)
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[lo:hi] = np.cumsum(self.data[lo:hi])
        return _frozen(out)

    @property
    def csr(self):
        return (self.indptr, self.indices, self.data)

    @cached_property
    def matrix(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def dense(self):
        return _frozen(self.matrix.toarray())

    @property
    def nnz(self):
        return int(self.indptr[-1])

    def index(self, state):
        """Resolve an integer index or a state label to an index."""
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if not 0 <= state < self.n:
                raise BadIndex(f"state index {state} outside [0, {self.n})")
            return int(state)
        try:
            return self.states.index(str(state))
        except ValueError:
            raise BadIndex(f"unknown state {state!r}") from None

    def p(self, i, j):
        for k, q in self.rows[i]:
            if k == j:
                return q
        return 0.0

    # -- construction helpers ---------------------------------------------

    @classmethod
    def from_dense(cls, P, states=None, metadata=None):
        P = np.asarray(P, dtype=np.float64)
        rows = [[(j, P[i, j]) for j in np.flatnonzero(P[i])] for i in range(P.shape[0])]
        return cls(P.shape[0], tuple(states or ()), tuple(rows), metadata or {})

    def with_metadata(self, **extra):
        md = dict(self.metadata)
        md.update({k: str(v) for k, v in extra.items()})
        return ChainSpec(self.n, self.states, self.rows, md)

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "n": self.n,
            "states": list(self.states),
            "rows": [[[j, p] for j, p in r] for r in self.rows],
            "metadata": dict(self.metadata),
        }

    def to_json(self, extra=None):
        """Chain JSON with probabilities written to 17 significant digits."""
        rows = ",\n  ".join(
            "[" + ", ".join(f"[{j}, {p:.17g}]" for j, p in r) + "]" for r in self.rows
        )
        head = {"n": self.n, "states": list(self.states)}
        parts = [json.dumps(head)[:-1], f', "rows": [\n  {rows}\n]']
        parts.append(f', "metadata": {json.dumps(dict(self.metadata), sort_keys=True)}')
        for key, value in (extra or {}).items():
            parts.append(f", {json.dumps(key)}: {json.dumps(value, sort_keys=True)}")
        return "".join(parts) + "}\n"


def validate(raw) -> ChainSpec:
    """Return a validated :class:`ChainSpec` from a ChainSpec, a chain-JSON
    dict, or a JSON string."""
    if isinstance(raw, ChainSpec):
        return ChainSpec(raw.n, raw.states, raw.rows, raw.metadata)
    if isinstance(raw, str):
        raw = json.loads(raw)
    try:
        n = raw["n"]
        rows = raw["rows"]
    except (KeyError, TypeError):
        raise ValidationError("chain JSON needs 'n' and 'rows'") from None
    return ChainSpec(n, tuple(raw.get("states") or ()), tuple(rows), raw.get("metadata") or {})


def load_chain(path) -> ChainSpec:
    with open(path) as fh:
        return validate(json.load(fh))


def point_mass(chain, x):
    v = np.zeros(chain.n)
    v[chain.index(x)] = 1.0
    return v


def lazy(chain: ChainSpec, hold: float = 0.5) -> ChainSpec:
    """The chain ``hold*I + (1-hold)*P``."""
    P = (1.0 - hold) * chain.dense + hold * np.eye(chain.n)
    md = dict(chain.metadata)
    md["lazy"] = repr(hold)
    return ChainSpec.from_dense(P, chain.states, md)


# -- distribution evolution ----------------------------------------------


def evolve(chain: ChainSpec, dist, t: int):
    """Return ``dist P^t``."""
    v = np.asarray(dist, dtype=np.float64)
    if v.shape != (chain.n,):
        raise ValidationError(f"distribution has shape {v.shape}, expected ({chain.n},)")
    if np.any(v < 0) or abs(math.fsum(v) - 1.0) > ROW_SUM_TOL:
        raise ValidationError("input is not a probability vector")
    if t < 0:
        raise ValidationError("t must be non-negative")
    return kernels.evolve(*chain.csr, v[None, :].copy(), int(t))[0]


# -- communicating structure ---------------------------------------------


def communicating_classes(chain: ChainSpec):
    """Return ``(labels, closed)``: SCC label per state and, per label,
    whether the class has no outgoing transitions."""
    ncomp, labels = csgraph.connected_components(chain.matrix, directed=True, connection="strong")
    closed = np.ones(ncomp, dtype=bool)
    for i in range(chain.n):
        for j, _ in chain.rows[i]:
            if labels[j] != labels[i]:
                closed[labels[i]] = False
    return labels, closed


def communicating_class(chain: ChainSpec, x) -> np.ndarray:
    labels, _ = communicating_classes(chain)
    return np.flatnonzero(labels == labels[chain.index(x)])


def restrict(chain: ChainSpec, keep) -> ChainSpec:
    """Sub-chain on a closed set of states (rows must not leave ``keep``)."""
    keep = np.asarray(keep, dtype=np.int64)
    pos = {int(s): k for k, s in enumerate(keep)}
    rows = []
    for s in keep:
        row = [(pos[j], p) for j, p in chain.rows[s] if j in pos]
        rows.append(row)
    return ChainSpec(len(keep), tuple(chain.states[s] for s in keep), tuple(rows), chain.metadata)


# -- stationarity ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StationaryDist:
    pi: np.ndarray
    residual: float

    def __getitem__(self, i):
        return self.pi[i]


def _residual(chain, pi):
    return float(np.max(np.abs(np.asarray(pi @ chain.matrix).ravel() - pi)))


def _solve_dense(P):
    m = P.shape[0]
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    return scipy.linalg.solve(A, b)


def _solve_sparse(P):
    m = P.shape[0]
    A = (P.T - sp.identity(m, format="csr")).tolil()
    A[m - 1, :] = np.ones(m)
    b = np.zeros(m)
    b[-1] = 1.0
    return spla.spsolve(A.tocsc(), b)


def _solve_power(P, tol=1e-15, max_iter=10**7):
    m = P.shape[0]
    v = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        w = 0.5 * (v + np.asarray(v @ P).ravel())
        if np.max(np.abs(w - v)) <= tol:
            return w
        v = w
    raise NotUnique("power iteration did not converge")


def stationary(chain: ChainSpec, method: str = "auto") -> StationaryDist:
    """Unique stationary distribution.

    The fixed-point space of ``P`` has dimension equal to the number of
    closed communicating classes, so uniqueness is decided structurally
    before solving on the single closed class.
    """
    labels, closed = communicating_classes(chain)
    closed_ids = np.flatnonzero(closed)
    if len(closed_ids) != 1:
        raise NotUnique(f"{len(closed_ids)} closed communicating classes")
    support = np.flatnonzero(labels == closed_ids[0])
    P = chain.matrix[support][:, support]
    if method == "auto":
        method = "dense" if len(support) <= DENSE_LIMIT else "sparse"
    if method == "dense":
        sub = _solve_dense(P.toarray())
    elif method == "sparse":
        sub = _solve_sparse(P.tocsr())
    elif method == "power":
        sub = _solve_power(P.tocsr())
    else:
        raise ValueError(f"unknown method {method!r}")
    sub = np.clip(sub, 0.0, None)
    sub /= math.fsum(sub)
    pi = np.zeros(chain.n)
    pi[support] = sub
    res = _residual(chain, pi)
    if res > 1e-10:
        raise NotUnique(f"stationary solve residual {res:.3g} exceeds 1e-10")
    return StationaryDist(_frozen(pi), res)


def detailed_balance_gap(chain: ChainSpec, pi) -> float:
    pi = np.asarray(getattr(pi, "pi", pi))
    F = sp.diags(pi) @ chain.matrix
    D = (F - F.T).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


def is_reversible(chain: ChainSpec, pi, tol: float = 1e-12) -> bool:
    """Detailed balance ``pi(x)p(x,y) == pi(y)p(y,x)`` within ``tol``."""
    return detailed_balance_gap(chain, pi) <= tol


def symmetrized(chain: ChainSpec, pi, support=None):
    """Dense ``D^{1/2} P D^{-1/2}`` on ``support`` (default: where pi > 0)."""
    pi = np.asarray(getattr(pi, "pi", pi))
    if support is None:
        support = np.flatnonzero(pi > 0)
    P = chain.matrix[support][:, support].toarray()
    r = np.sqrt(pi[support])
    A = r[:, None] * P / r[None, :]
    return 0.5 * (A + A.T)


def reversible_eigenvalues(chain: ChainSpec, pi, support=None):
    """Ascending eigenvalues of a reversible chain via its symmetrization."""
    return scipy.linalg.eigvalsh(symmetrized(chain, pi, support))


# -- mixing ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixingProfile:
    x: int
    horizon: int
    d: np.ndarray

    def t_mix(self, eps: float = 0.25) -> int:
        """First t with d_x(t) <= eps for this start."""
        hits = np.flatnonzero(self.d <= eps)
        if hits.size == 0:
            raise HorizonTooSmall(f"d_x({self.horizon}) = {self.d[-1]:.3g} > {eps}")
        return int(hits[0])


def mixing_profile(chain: ChainSpec, x, T: int, pi=None) -> MixingProfile:
    if pi is None:
        pi = stationary(chain)
    pi = np.asarray(getattr(pi, "pi", pi))
    xi = chain.index(x)
    d = kernels.tv_trace(*chain.csr, point_mass(chain, xi)[None, :], pi, int(T))[0]
    return MixingProfile(xi, int(T), _frozen(np.clip(d, 0.0, 1.0)))


def distance_table(chain: ChainSpec, T: int, pi=None) -> np.ndarray:
    """``d_x(t)`` for every start x (rows) and t = 0..T (columns)."""
    if pi is None:
        pi = stationary(chain)
    pi = np.asarray(getattr(pi, "pi", pi))
    return np.clip(kernels.tv_trace(*chain.csr, np.eye(chain.n), pi, int(T)), 0.0, 1.0)


def mixing_time(chain: ChainSpec, eps: float = 0.25, T: int = 10_000, pi=None) -> int:
    """``t_mix(eps) = min{t : max_x d_x(t) <= eps}``."""
    worst = distance_table(chain, T, pi).max(axis=0)
    hits = np.flatnonzero(worst <= eps)
    if hits.size == 0:
        raise HorizonTooSmall(f"max_x d_x({T}) = {worst[-1]:.3g} > {eps}")
    return int(hits[0])
