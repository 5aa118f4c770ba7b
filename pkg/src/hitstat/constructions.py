"""Example chains and graphs, plus seeded random corpus generators.

Every family builder returns a :class:`FamilyInstance`: the chain, the
parameters it was built from, designated states (start, target, target time,
killing set) and closed-form values the harness compares against.
"""

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .chain import ChainSpec, lazy
from .errors import BadHorizon, BadParams, Disconnected, SelfLoopUnlessRequested
from .geomsum import geom_sum_pmf


class Family(str, enum.Enum):
    CycleTrap = "cycle-trap"
    CycleTrapMulti = "cycle-trap-multi"
    PureBirth = "pure-birth"
    PureBirthTail = "pure-birth-tail"
    Gm = "gm"
    GmTorus = "gm-torus"
    CycleGraph = "cycle-graph"
    PathGraph = "path-graph"
    BinaryTree = "binary-tree"
    Torus3 = "torus3"
    RandomChain = "random-chain"
    RandomReversible = "random-reversible"
    RandomGraph = "random-graph"


# -- graphs ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph; ``adj[v]`` is the sorted tuple of neighbours of v."""

    n: int
    adj: tuple
    labels: tuple = ()

    @classmethod
    def from_edges(cls, n, edges, labels=()):
        """Parallel edges collapse to one; a self-loop ``(v, v)`` is kept."""
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise BadParams(f"edge ({u}, {v}) outside [0, {n})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs), tuple(labels))

    @property
    def degrees(self):
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    @property
    def edges(self):
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u <= v]

    @property
    def has_self_loops(self):
        return any(v in self.adj[v] for v in range(self.n))

    def is_connected(self):
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return bool(seen.all())

    def is_bipartite(self):
        color = np.full(self.n, -1)
        for s in range(self.n):
            if color[s] >= 0:
                continue
            color[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in self.adj[u]:
                    if color[v] < 0:
                        color[v] = 1 - color[u]
                        queue.append(v)
                    elif color[v] == color[u]:
                        return False
        return True


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise BadParams("a simple cycle needs n >= 3")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    if n < 2:
        raise BadParams("a path needs n >= 2")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def _tree_edges(h, root, first_new):
    """Edges of a complete binary tree with ``h`` levels whose root is the
    existing vertex ``root``; new vertices are numbered from ``first_new``.
    Heap order: node j (1-based) has children 2j and 2j+1."""
    size = 2**h - 1
    label = {1: root}
    for j in range(2, size + 1):
        label[j] = first_new + j - 2
    return [(label[j // 2], label[j]) for j in range(2, size + 1)], size - 1


def binary_tree_graph(h: int) -> Graph:
    """Complete binary tree with ``h`` levels (``2^h - 1`` vertices)."""
    if h < 1:
        raise BadParams("height must be at least 1")
    edges, extra = _tree_edges(h, 0, 1)
    return Graph.from_edges(1 + extra, edges)


def torus3(k: int) -> Graph:
    """Nearest-neighbour graph on ``(Z/kZ)^3``; vertex ``(a, b, c)`` is
    ``a*k*k + b*k + c``. For k = 2 the +1 and -1 neighbours coincide and the
    parallel edges collapse, so degrees are 3 rather than 6."""
    if k < 2:
        raise BadParams("torus side must be at least 2")
    edges = []
    for a in range(k):
        for b in range(k):
            for c in range(k):
                v = a * k * k + b * k + c
                edges.append((v, ((a + 1) % k) * k * k + b * k + c))
                edges.append((v, a * k * k + ((b + 1) % k) * k + c))
                edges.append((v, a * k * k + b * k + (c + 1) % k))
    labels = [f"t{a}.{b}.{c}" for a in range(k) for b in range(k) for c in range(k)]
    return Graph.from_edges(k**3, edges, labels)


def graph_walk_chain(graph: Graph, allow_self_loops: bool = False, metadata=None) -> ChainSpec:
    """Simple random walk: ``p(u, v) = 1/deg(u)`` for each neighbour v."""
    if graph.has_self_loops and not allow_self_loops:
        raise SelfLoopUnlessRequested("graph has self-loops; pass allow_self_loops=True")
    if not graph.is_connected():
        raise Disconnected("random walk needs a connected graph")
    if graph.n > 1 and min(len(a) for a in graph.adj) == 0:  # pragma: no cover
        raise Disconnected("isolated vertex")
    rows = tuple(tuple((v, 1.0 / len(a)) for v in a) for a in graph.adj)
    return ChainSpec(graph.n, graph.labels, rows, metadata or {})


# -- family instances ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FamilyInstance:
    chain: ChainSpec
    family: Family
    params: Mapping = field(default_factory=dict)
    designated: Mapping = field(default_factory=dict)
    closed_forms: Mapping = field(default_factory=dict)
    graph: Optional[Graph] = None

    def __post_init__(self):
        for key in ("params", "designated", "closed_forms"):
            object.__setattr__(self, key, MappingProxyType(dict(getattr(self, key))))
        for role, v in self.designated.items():
            vals = v if isinstance(v, tuple) else (v,)
            if role in ("target_t", "N"):
                continue
            for s in vals:
                if not 0 <= s < self.chain.n:
                    raise BadParams(f"designated {role}={s} outside the state space")

    @property
    def params_str(self):
        """Canonical ``k=v;k=v`` form used in reports."""
        return ";".join(f"{k}={self.params[k]}" for k in sorted(self.params))

    def to_json(self):
        extra = {
            "family": self.family.value,
            "params": dict(self.params),
            "designated": {k: list(v) if isinstance(v, tuple) else v for k, v in self.designated.items()},
            "closed_forms": dict(self.closed_forms),
        }
        return self.chain.to_json(extra)


def _labels(prefix, count, start=1):
    return [f"{prefix}{i}" for i in range(start, start + count)]


def cycle_trap(n: int, t: int) -> FamilyInstance:
    """Cycle ``s_1 -> ... -> s_{n-1}`` whose last state leaks to a trap ``u``
    with probability ``1/r``; ``u`` re-enters at ``s_2``.

    With ``t = r(n-1) + k`` (``1 <= k <= n-1``) and ``x = s_{n-k}``, the walk
    can only reach ``u`` at times ``k + j(n-1)``, so
    ``P_x(tau(u) = t) = (1 - 1/r)^r / r``. Needs ``r >= 2``, i.e.
    ``t >= 2n - 1``. For n = 2 the cycle is the single
    state ``s_1`` and ``u`` returns to it.
    """
    if n < 2:
        raise BadParams("n must be at least 2")
    m = n - 1
    r, k = divmod(t - 1, m)
    k += 1
    if r < 2:
        raise BadHorizon(f"t={t} = r(n-1) + k gives r={r} < 2")
    q = 1.0 / r
    u = m
    rows = [[((i + 1) % m, 1.0)] for i in range(m - 1)]
    rows.append([(0, 1.0 - q), (u, q)])
    rows.append([(1 % m, 1.0)])
    chain = ChainSpec(n, tuple(_labels("s", m) + ["u"]), tuple(rows), {"family": "cycle-trap"})
    return FamilyInstance(
        chain,
        Family.CycleTrap,
        {"n": n, "t": t, "r": r, "k": k},
        {"x": n - k - 1, "y": u, "target_t": t},
        {"hit_prob": (1.0 - q) ** r * q, "lower_bound": n / (8.0 * t)},
    )


def cycle_trap_multi(n: int, t: int) -> FamilyInstance:
    """Cycle ``s_1..s_n`` where ``s_n`` leaks to each of ``u_1..u_n`` with
    probability ``1/r`` and every ``u_i`` re-enters at ``s_2``; here
    ``t = rn + k`` with ``1 <= k <= n`` and ``x = s_{n-k+1}``.

    The leak probabilities are only valid when ``n/r <= 1``.
    """
    if n < 2:
        raise BadParams("n must be at least 2")
    r, k = divmod(t - 1, n)
    k += 1
    if r < 2:
        raise BadHorizon(f"t={t} = rn + k gives r={r} < 2")
    q = 1.0 / r
    stay = 1.0 - n * q
    if stay < -1e-15:
        raise BadParams(f"n/r = {n}/{r} exceeds 1; the leak probabilities do not fit")
    rows = [[(i + 1, 1.0)] for i in range(n - 1)]
    last = [(0, stay)] if stay > 0 else []
    rows.append(last + [(n + i, q) for i in range(n)])
    rows += [[(1, 1.0)] for _ in range(n)]
    chain = ChainSpec(2 * n, tuple(_labels("s", n) + _labels("u", n)), tuple(rows), {"family": "cycle-trap-multi"})
    return FamilyInstance(
        chain,
        Family.CycleTrapMulti,
        {"n": n, "t": t, "r": r, "k": k},
        {"x": n - k, "target_t": t},
        {"surprise_lower_bound": n * n / (56.0 * t)},
    )


def _birth_rows(n, p):
    rows = []
    for i in range(n - 1):
        rows.append([(i, 1.0 - p), (i + 1, p)] if p < 1.0 else [(i + 1, 1.0)])
    return rows


def pure_birth(n: int, t: int) -> FamilyInstance:
    """States ``1..n``; each holds with probability ``1 - n/t`` or advances;
    ``n`` is absorbing. ``tau(n)`` from 1 is ``n - 1`` plus a sum of ``n - 1``
    i.i.d. geometrics with success probability ``n/t``."""
    if n < 2:
        raise BadParams("n must be at least 2")
    if t < n:
        raise BadParams(f"need t >= n so that n/t <= 1; got t={t}, n={n}")
    p = n / t
    rows = _birth_rows(n, p) + [[(n - 1, 1.0)]]
    chain = ChainSpec(n, tuple(_labels("", n)), tuple(rows), {"family": "pure-birth"})
    hit = geom_sum_pmf([1.0 - p] * (n - 1), t - (n - 1))
    return FamilyInstance(
        chain,
        Family.PureBirth,
        {"n": n, "t": t, "p": p},
        {"x": 0, "y": n - 1, "target_t": t},
        {"hit_pmf_at_t": hit, "lower_bound": math.sqrt(n) / (3.0 * t)},
    )


def pure_birth_tail(n: int, t: int) -> FamilyInstance:
    """Pure-birth chain on ``1..n`` followed by a deterministic run
    ``n -> n+1 -> ... -> 2n`` (``2n`` absorbing). Started at ``n`` the walk
    sees ``n`` distinct states of ``U = {n..2n}`` in its first ``n`` steps."""
    if n < 2:
        raise BadParams("n must be at least 2")
    if t < n * math.sqrt(n):
        raise BadParams(f"need t >= n^(3/2); got t={t}, n={n}")
    p = n / t
    rows = _birth_rows(n, p)
    rows += [[(i + 1, 1.0)] for i in range(n - 1, 2 * n - 1)]
    rows.append([(2 * n - 1, 1.0)])
    chain = ChainSpec(2 * n, tuple(_labels("", 2 * n)), tuple(rows), {"family": "pure-birth-tail"})
    return FamilyInstance(
        chain,
        Family.PureBirthTail,
        {"n": n, "t": t, "p": p},
        {"x": 0, "y": n - 1, "U": tuple(range(n - 1, 2 * n)), "N": n},
        {"expected_new_in_U": float(n)},
    )


def gm_size(m: int) -> int:
    return 4**m - 2**m - 2 * m + 2


def _gm_graph(m):
    L = 2**m
    edges = [(i, i + 1) for i in range(L - 1)]
    labels = [f"v{i + 1}" for i in range(L)]
    nxt = L
    for k in range(1, m):
        tree, extra = _tree_edges(2 * m - k, 2**k - 1, nxt)
        edges += tree
        labels += [f"T{k}.{j}" for j in range(2, extra + 2)]
        nxt += extra
    return Graph.from_edges(nxt, edges, labels)


def g_m(m: int) -> FamilyInstance:
    """Path ``v_1..v_{2^m}`` with a complete binary tree of ``2m - k`` levels
    rooted at ``w_k = v_{2^k}`` for ``k = 1..m-1``. Start ``w_m``, target
    ``w_0 = v_1``."""
    if not 2 <= m <= 8:
        raise BadParams("m must be in [2, 8]")
    g = _gm_graph(m)
    n = g.n
    if n != gm_size(m):  # pragma: no cover - structural invariant
        raise AssertionError("G_m size formula violated")
    chain = graph_walk_chain(g, metadata={"family": "gm", "m": m})
    return FamilyInstance(
        chain,
        Family.Gm,
        {"m": m},
        {"x": 2**m - 1, "y": 0},
        {"n": n, "max_degree": int(g.degrees.max())},
        g,
    )


def g_m_torus(m: int) -> FamilyInstance:
    """``G_m`` plus a 3-torus of side ``floor(n^(1/3))`` whose vertex
    ``(0,0,0)`` is joined to ``w_0``. ``U`` is the torus, ``N = n``."""
    if not 2 <= m <= 8:
        raise BadParams("m must be in [2, 8]")
    base = _gm_graph(m)
    n = base.n
    k = round(n ** (1.0 / 3.0))
    while k**3 > n:
        k -= 1
    while (k + 1) ** 3 <= n:
        k += 1
    if k < 2:  # pragma: no cover - m >= 2 gives n >= 10
        raise BadParams("torus side below 2")
    tor = torus3(k)
    off = n
    edges = list(base.edges)
    edges += [(u + off, v + off) for u, v in tor.edges]
    edges.append((0, off))
    g = Graph.from_edges(n + tor.n, edges, base.labels + tor.labels)
    chain = graph_walk_chain(g, metadata={"family": "gm-torus", "m": m})
    return FamilyInstance(
        chain,
        Family.GmTorus,
        {"m": m, "k": k},
        {"x": 2**m - 1, "y": 0, "U": tuple(range(off, off + tor.n)), "N": n},
        {"n_gm": n, "torus_side": k},
        g,
    )


def _graph_family(family, g, params):
    chain = graph_walk_chain(g, metadata={"family": family.value})
    return FamilyInstance(chain, family, params, {}, {}, g)


def cycle_graph_family(n: int) -> FamilyInstance:
    return _graph_family(Family.CycleGraph, cycle_graph(n), {"n": n})


def path_graph_family(n: int) -> FamilyInstance:
    return _graph_family(Family.PathGraph, path_graph(n), {"n": n})


def binary_tree_family(h: int) -> FamilyInstance:
    return _graph_family(Family.BinaryTree, binary_tree_graph(h), {"h": h})


def torus3_family(k: int) -> FamilyInstance:
    return _graph_family(Family.Torus3, torus3(k), {"k": k})


# -- random corpora ----------------------------------------------------------


def _rng(seed):
    return np.random.default_rng(int(seed))


def random_chain(n: int, seed: int, density: float = 1.0) -> FamilyInstance:
    """I.i.d. uniform weights, each entry kept with probability ``density``
    (at least one per row), rows normalized."""
    if n < 1:
        raise BadParams("n must be positive")
    rng = _rng(seed)
    W = rng.random((n, n))
    if density < 1.0:
        keep = rng.random((n, n)) < density
        keep[np.arange(n), rng.integers(0, n, n)] = True
        W *= keep
    P = W / W.sum(axis=1, keepdims=True)
    chain = ChainSpec.from_dense(P, metadata={"family": "random-chain", "seed": seed})
    return FamilyInstance(chain, Family.RandomChain, {"n": n, "seed": seed, "density": density})


def _connected(mask):
    return Graph.from_edges(len(mask), zip(*np.nonzero(np.triu(mask, 1)))).is_connected()


def random_reversible(n: int, seed: int, lazy_hold: float = 0.0, density: float = 1.0) -> FamilyInstance:
    """Symmetric uniform weights ``w(u, v)`` (diagonal included), each
    off-diagonal pair kept with probability ``density`` and resampled until
    the support is connected; ``p(u, v) = w(u, v) / sum_v w(u, v)``.
    ``lazy_hold > 0`` mixes in that much holding probability."""
    if n < 1:
        raise BadParams("n must be positive")
    rng = _rng(seed)
    while True:
        W = rng.random((n, n))
        W = np.triu(W) + np.triu(W, 1).T
        if density < 1.0:
            keep = rng.random((n, n)) < density
            keep = np.triu(keep, 1)
            keep = keep | keep.T | np.eye(n, dtype=bool)
            W *= keep
        if n == 1 or _connected(W > 0):
            break
    P = W / W.sum(axis=1, keepdims=True)
    chain = ChainSpec.from_dense(P, metadata={"family": "random-reversible", "seed": seed})
    if lazy_hold > 0:
        chain = lazy(chain, lazy_hold)
    return FamilyInstance(
        chain,
        Family.RandomReversible,
        {"n": n, "seed": seed, "density": density, "lazy": lazy_hold},
    )


def random_graph(n: int, edge_prob: float, seed: int) -> FamilyInstance:
    """Erdos-Renyi ``G(n, edge_prob)`` resampled until connected."""
    if n < 2:
        raise BadParams("n must be at least 2")
    if not 0.0 < edge_prob <= 1.0:
        raise BadParams("edge_prob must lie in (0, 1]")
    rng = _rng(seed)
    iu = np.triu_indices(n, 1)
    while True:
        take = rng.random(len(iu[0])) < edge_prob
        g = Graph.from_edges(n, zip(iu[0][take], iu[1][take]))
        if g.is_connected():
            break
    chain = graph_walk_chain(g, metadata={"family": "random-graph", "seed": seed})
    return FamilyInstance(chain, Family.RandomGraph, {"n": n, "p": edge_prob, "seed": seed}, {}, {}, g)


_BUILDERS = {
    Family.CycleTrap: (cycle_trap, ("n", "t")),
    Family.CycleTrapMulti: (cycle_trap_multi, ("n", "t")),
    Family.PureBirth: (pure_birth, ("n", "t")),
    Family.PureBirthTail: (pure_birth_tail, ("n", "t")),
    Family.Gm: (g_m, ("m",)),
    Family.GmTorus: (g_m_torus, ("m",)),
    Family.CycleGraph: (cycle_graph_family, ("n",)),
    Family.PathGraph: (path_graph_family, ("n",)),
    Family.BinaryTree: (binary_tree_family, ("h",)),
    Family.Torus3: (torus3_family, ("k",)),
    Family.RandomChain: (random_chain, ("n", "seed")),
    Family.RandomReversible: (random_reversible, ("n", "seed")),
    Family.RandomGraph: (random_graph, ("n", "p", "seed")),
}


def build(family, **params) -> FamilyInstance:
    """Build a family by name, e.g. ``build("cycle-trap", n=5, t=9)``."""
    fam = Family(family)
    fn, needed = _BUILDERS[fam]
    missing = [k for k in needed if params.get(k) is None]
    if missing:
        raise BadParams(f"family {fam.value} needs parameters {', '.join(missing)}")
    return fn(*(params[k] for k in needed))


def family_names():
    return [f.value for f in Family]
