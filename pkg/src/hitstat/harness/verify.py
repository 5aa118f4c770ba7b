"""Verification campaigns: exact hitting probabilities against every
applicable bound over a corpus of chains.

By default each (chain, kind, x, y) contributes one report row, the time
with the smallest slack, together with per-kind counts of checked and
violating cells; ``detail=True`` keeps every cell instead.
"""

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..chain import distance_table, is_reversible, mixing_time, reversible_eigenvalues, stationary
from ..constructions import random_chain, random_graph, random_reversible
from ..errors import HorizonTooSmall, NotUnique
from ..hitting import hitting_table
from ..kernels import hitting_many
from ..maxprob import certifying_horizon, maximal_row, spectral_info
from .bounds import SURPRISE_KINDS, BoundContext, BoundKind, bound_array, psi_best

SLACK_TOL = 1e-12
CERT_HORIZON_LIMIT = 10**6
CSV_HEADER = "family,params,x,y,t,exact,kind,bound,slack,pass"


@dataclass(frozen=True)
class ReportRow:
    family: str
    params: str
    x: str
    y: str
    t: int
    exact: float
    kind: str
    bound: float
    slack: float
    passed: bool

    @property
    def key(self):
        return (self.family, self.params, self.kind, self.x, self.y, self.t)

    def csv(self):
        return (
            f"{self.family},{self.params},{self.x},{self.y},{self.t},{float(self.exact)!r},"
            f"{self.kind},{float(self.bound)!r},{float(self.slack)!r},{'true' if self.passed else 'false'}"
        )


@dataclass
class KindStats:
    checked: int = 0
    violations: int = 0
    not_applicable: int = 0

    def add(self, other):
        self.checked += other.checked
        self.violations += other.violations
        self.not_applicable += other.not_applicable


@dataclass
class VerificationReport:
    rows: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    grid: str = ""
    notes: list = field(default_factory=list)
    version: str = __version__

    @property
    def passed(self):
        return all(s.violations == 0 for s in self.stats.values())

    @property
    def failing_rows(self):
        return [r for r in self.rows if not r.passed]

    def violations(self, kind=None):
        if kind is None:
            return sum(s.violations for s in self.stats.values())
        return self.stats.get(BoundKind(kind).value, KindStats()).violations

    def checked(self, kind):
        return self.stats.get(BoundKind(kind).value, KindStats()).checked

    def _stat(self, kind):
        return self.stats.setdefault(kind, KindStats())

    def merge(self, other):
        self.rows.extend(other.rows)
        for k, s in other.stats.items():
            self._stat(k).add(s)
        self.seeds.extend(other.seeds)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def finalize(self):
        self.rows.sort(key=lambda r: r.key)
        self.stats = dict(sorted(self.stats.items()))
        return self

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in sorted(self.rows, key=lambda r: r.key):
            buf.write(r.csv() + "\n")
        return buf.getvalue()

    def summary(self):
        return {
            "passed": self.passed,
            "kinds": {
                k: {"checked": s.checked, "violations": s.violations, "not_applicable": s.not_applicable}
                for k, s in sorted(self.stats.items())
            },
        }

    def to_json(self):
        doc = {
            "version": self.version,
            "grid": self.grid,
            "seeds": list(self.seeds),
            "notes": list(self.notes),
            **self.summary(),
            "rows": [
                {
                    "family": r.family,
                    "params": r.params,
                    "x": r.x,
                    "y": r.y,
                    "t": r.t,
                    "exact": r.exact,
                    "kind": r.kind,
                    "bound": r.bound,
                    "slack": r.slack,
                    "pass": r.passed,
                }
                for r in sorted(self.rows, key=lambda r: r.key)
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# -- per-chain facts -----------------------------------------------------------


class _Facts:
    """Lazily computed properties of one corpus chain."""

    def __init__(self, inst, T):
        self.inst = inst
        self.chain = inst.chain
        self.n = inst.chain.n
        self.T = T
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def pi(self):
        def f():
            try:
                return np.asarray(stationary(self.chain).pi)
            except NotUnique:
                return None

        return self._get("pi", f)

    @property
    def irreducible(self):
        return self.pi is not None and bool(np.all(self.pi > 0))

    @property
    def reversible(self):
        return self._get("rev", lambda: self.irreducible and is_reversible(self.chain, self.pi, 1e-12))

    @property
    def graph(self):
        g = self.inst.graph
        return g is not None and not g.has_self_loops

    @property
    def nonneg_eigen(self):
        def f():
            if not self.reversible:
                return False
            return bool(reversible_eigenvalues(self.chain, self.pi).min() >= -1e-12)

        return self._get("nonneg", f)

    @property
    def dist(self):
        return self._get("dist", lambda: distance_table(self.chain, self.T, self.pi))

    @property
    def t_mix(self):
        def f():
            try:
                return mixing_time(self.chain, 0.25, self.T, self.pi)
            except HorizonTooSmall:
                return None

        return self._get("tmix", f)

    def table(self, starts, targets):
        key = ("H", tuple(starts), tuple(targets))
        return self._get(key, lambda: hitting_table(self.chain, self.T, starts, targets)[0])

    def prefix_max_sum(self, starts):
        """``M[i, t] = sum_z max_{s < t} p^s(starts[i], z)``."""

        def f():
            P = self.chain.dense
            V = np.zeros((len(starts), self.n))
            V[np.arange(len(starts)), starts] = 1.0
            run = np.zeros_like(V)
            M = np.full((len(starts), self.T + 1), np.nan)
            for t in range(1, self.T + 1):
                np.maximum(run, V, out=run)
                M[:, t] = run.sum(axis=1)
                V = V @ P
            return M

        return self._get(("M", tuple(starts)), f)

    def stationary_table(self, targets):
        def f():
            V0 = np.tile(self.pi, (len(targets), 1))
            pmf, _ = hitting_many(*self.chain.csr, V0, np.asarray(targets, dtype=np.int64), self.T)
            return pmf

        return self._get(("Hpi", tuple(targets)), f)


def _composite_bound(facts, starts, ts):
    """``min_{0<s<t} d_x(s) psi(t-s) + 1/(t-s)`` for each start and t."""
    n, T = facts.n, facts.T
    D = facts.dist[starts]  # (a, T+1)
    pi_min = float(facts.pi.min()) if facts.reversible else None
    s = np.arange(T + 1)
    tt = np.asarray(ts)
    lag = tt[:, None] - s[None, :]  # (K, T+1)
    psi = psi_best(n, np.maximum(lag, 1), facts.reversible, pi_min)
    val, ok = bound_array(
        BoundKind.Composite,
        BoundContext(n, tt[None, :, None], s=s[None, None, :], d_x_s=D[:, None, :], psi=psi[None, :, :]),
    )
    val = np.where(ok, val, np.inf)
    best = val.min(axis=2)
    return np.where(np.isfinite(best), best, np.nan), np.isfinite(best)


def _emit(report, inst, kind, xs, ys, ts, exact, bound, ok, detail):
    """Add rows for ``exact[i, j, k]`` against ``bound`` (broadcastable)
    where ``ok`` holds."""
    exact = np.asarray(exact, dtype=np.float64)
    bound = np.broadcast_to(bound, exact.shape)
    ok = np.broadcast_to(ok, exact.shape)
    slack = np.where(ok, bound - exact, np.inf)
    bad = ok & (slack < -SLACK_TOL)
    st = report._stat(kind.value)
    st.checked += int(ok.sum())
    st.violations += int(bad.sum())
    st.not_applicable += int((~ok).sum())
    fam, params = inst.family.value, inst.params_str
    for i in range(exact.shape[0]):
        for j in range(exact.shape[1]):
            row_ok = ok[i, j]
            if not row_ok.any():
                continue
            ks = np.flatnonzero(row_ok) if detail else [int(np.argmin(slack[i, j]))]
            for k in ks:
                report.rows.append(
                    ReportRow(
                        fam,
                        params,
                        xs[i],
                        ys[j],
                        int(ts[k]),
                        float(exact[i, j, k]),
                        kind.value,
                        float(bound[i, j, k]),
                        float(slack[i, j, k]),
                        bool(slack[i, j, k] >= -SLACK_TOL),
                    )
                )


def _pairs(inst, xy_policy):
    n = inst.chain.n
    if xy_policy == "designated":
        d = inst.designated
        starts = [d["x"]] if "x" in d else list(range(n))
        targets = [d["y"]] if "y" in d else list(range(n))
        return starts, targets
    if xy_policy != "all-pairs":
        raise ValueError(f"unknown xy_policy {xy_policy!r}")
    return list(range(n)), list(range(n))


def _verify_one(inst, kinds, ts, T, xy_policy, detail, report):
    facts = _Facts(inst, T)
    n = facts.n
    starts, targets = _pairs(inst, xy_policy)
    xs = [str(s) for s in starts]
    ys = [str(s) for s in targets]
    tgrid = np.asarray(ts)
    kinds = set(kinds)

    def H():
        return facts.table(starts, targets)[:, :, tgrid]

    for kind in sorted(kinds, key=lambda k: k.value):
        if kind in SURPRISE_KINDS:
            S = facts.table(starts, list(range(n))).sum(axis=1)[:, tgrid]
            ctx = BoundContext(n, tgrid[None, :], reversible=facts.reversible, graph=facts.graph)
            val, ok = bound_array(kind, ctx)
            _emit(report, inst, kind, xs, ["*"], tgrid, S[:, None, :], val[:, None, :], ok[:, None, :], detail)
        elif kind in (BoundKind.General, BoundKind.GraphLogN, BoundKind.ExtremalReversible, BoundKind.PositiveEigen):
            ctx = BoundContext(
                n, tgrid[None, None, :], reversible=facts.reversible, graph=facts.graph, nonneg_eigen=facts.nonneg_eigen
            )
            val, ok = bound_array(kind, ctx)
            _emit(report, inst, kind, xs, ys, tgrid, H(), val, ok, detail)
        elif kind in (BoundKind.ReversibleLogPi, BoundKind.Stationary):
            pi_x = facts.pi[starts] if facts.pi is not None else np.full(len(starts), np.nan)
            ctx = BoundContext(n, tgrid[None, None, :], pi_x=pi_x[:, None, None], reversible=facts.reversible)
            val, ok = bound_array(kind, ctx)
            _emit(report, inst, kind, xs, ys, tgrid, H(), val, ok, detail)
        elif kind is BoundKind.MaxSurprise:
            M = facts.prefix_max_sum(starts)[:, tgrid]
            val, ok = bound_array(kind, BoundContext(n, tgrid[None, None, :], pstar_sum=M[:, None, :]))
            _emit(report, inst, kind, xs, ys, tgrid, H(), val, ok, detail)
        elif kind is BoundKind.Composite:
            if facts.pi is None:
                report._stat(kind.value).not_applicable += len(starts) * len(targets) * len(tgrid)
                continue
            val, ok = _composite_bound(facts, starts, tgrid)
            _emit(report, inst, kind, xs, ys, tgrid, H(), val[:, None, :], ok[:, None, :], detail)
        elif kind is BoundKind.Composite4:
            t_mix = facts.t_mix if facts.pi is not None else None
            val, ok = bound_array(kind, BoundContext(n, tgrid[None, None, :], t_mix=t_mix))
            _emit(report, inst, kind, xs, ys, tgrid, H(), val, ok, detail)
        elif kind in (BoundKind.StationaryStart, BoundKind.StationaryMonotone):
            if facts.pi is None:
                report._stat(kind.value).not_applicable += len(targets) * len(tgrid)
                continue
            Q = facts.stationary_table(targets)
            if kind is BoundKind.StationaryStart:
                ex = Q[:, tgrid]
            else:
                ex = Q[:, tgrid] - Q[:, np.maximum(tgrid - 1, 0)]
            val, ok = bound_array(kind, BoundContext(n, tgrid[None, None, :], stationary_start=True))
            _emit(report, inst, kind, ["pi"], ys, tgrid, ex[None, :, :], val, ok, detail)
        elif kind is BoundKind.MaxProbSum:
            _verify_maxprob(inst, facts, starts, xs, report, detail)
        else:
            report._stat(kind.value).not_applicable += 1


def _verify_maxprob(inst, facts, starts, xs, report, detail):
    kind = BoundKind.MaxProbSum
    info = spectral_info(facts.chain, starts[0]) if facts.reversible else None
    for x, label in zip(starts, xs):
        T = certifying_horizon(facts.chain, x, info=info) if info is not None else None
        if T is None or T > CERT_HORIZON_LIMIT:
            report._stat(kind.value).not_applicable += 1
            continue
        row = maximal_row(facts.chain, x, T, info=info)
        ctx = BoundContext(facts.n, T, pi_x=float(facts.pi[x]), reversible=True, certified=row.certified)
        val, ok = bound_array(kind, ctx)
        _emit(
            report, inst, kind, [label], ["*"], [T],
            np.array([[[row.total]]]), val.reshape(1, 1, 1), ok.reshape(1, 1, 1), detail,
        )


def verify_family(corpus, kinds, t_grid, xy_policy: str = "all-pairs", detail: bool = False, seeds=()):
    """Check every applicable bound in ``kinds`` on every chain of ``corpus``
    for each ``t`` in ``t_grid``.

    Returns a :class:`VerificationReport`; the campaign passes iff no cell
    violates its bound by more than 1e-12.
    """
    kinds = tuple(BoundKind(k) for k in kinds)
    ts = sorted({int(t) for t in t_grid})
    if not ts or ts[0] < 1:
        raise ValueError("t grid must be non-empty and positive")
    T = ts[-1]
    report = VerificationReport(seeds=list(seeds), grid=f"t={ts[0]}..{T} ({len(ts)} values); xy={xy_policy}")
    if BoundKind.Composite in kinds:
        report.notes.append("composite bound uses the start-specific distance d_x(s), minimized over s")
    for inst in corpus:
        _verify_one(inst, kinds, ts, T, xy_policy, detail, report)
    return report.finalize()


# -- corpora ---------------------------------------------------------------


def _draws(seed):
    return np.random.default_rng(int(seed))


def random_corpus(count: int, n_max: int, seed: int, n_min: int = 2):
    """``count`` random chains with ``n_min <= n <= n_max``; a third dense,
    the rest sparse (each entry kept with probability 0.5 or 0.25)."""
    rng = _draws(seed)
    ns = rng.integers(n_min, n_max + 1, count)
    dens = rng.choice([1.0, 0.5, 0.25], count)
    seeds = rng.integers(0, 2**31 - 1, count)
    return [random_chain(int(n), int(s), float(d)) for n, s, d in zip(ns, seeds, dens)], [int(s) for s in seeds]


def reversible_corpus(count: int, n_max: int, seed: int, lazy: bool = False, n_min: int = 2):
    rng = _draws(seed)
    ns = rng.integers(n_min, n_max + 1, count)
    dens = rng.choice([1.0, 0.5, 0.25], count)
    seeds = rng.integers(0, 2**31 - 1, count)
    hold = 0.5 if lazy else 0.0
    return [random_reversible(int(n), int(s), hold, float(d)) for n, s, d in zip(ns, seeds, dens)], [
        int(s) for s in seeds
    ]


def graph_corpus(count: int, n_max: int, seed: int, n_min: int = 3):
    rng = _draws(seed)
    ns = rng.integers(n_min, n_max + 1, count)
    probs = rng.uniform(0.1, 0.6, count)
    seeds = rng.integers(0, 2**31 - 1, count)
    corpus = [random_graph(int(n), float(round(p, 6)), int(s)) for n, p, s in zip(ns, probs, seeds)]
    return corpus, [int(s) for s in seeds]


CORPORA = {
    "random": lambda count, n_max, seed: random_corpus(count, n_max, seed),
    "reversible": lambda count, n_max, seed: reversible_corpus(count, n_max, seed, lazy=False),
    "lazy-reversible": lambda count, n_max, seed: reversible_corpus(count, n_max, seed, lazy=True),
    "graph": lambda count, n_max, seed: graph_corpus(count, n_max, seed),
}


def t_grid_for(lo: int, hi: int):
    return list(range(max(1, lo), hi + 1))
