"""Upper bounds on hitting-time and surprise probabilities.

Each :class:`BoundKind` carries an applicability predicate; evaluating a
bound outside it raises :class:`NotApplicable` instead of returning a number
that the theory does not vouch for.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import NotApplicable

E = math.e


class BoundKind(str, enum.Enum):
    """Hitting-time bounds first, then their surprise and stationary
    companions."""

    General = "general"  # n/t, t > n
    ReversibleLogPi = "reversible-log-pi"  # 2e max(1, log 1/pi(x)) / t
    GraphLogN = "graph-log-n"  # 4e log n / t
    ExtremalReversible = "extremal-reversible"  # sqrt(2n)/t, t >= 4n+4
    PositiveEigen = "positive-eigen"  # (1/2) sqrt(n/(t(t-n)))
    Stationary = "stationary"  # 1/(t pi(x))
    Composite = "composite"  # d_x(s) psi(t-s) + 1/(t-s)
    MaxProbSum = "maxprob-sum"  # sum_y p*(x,y) <= 2e max(1, log 1/pi(x))
    GeomSum = "geom-sum"  # (1/2) sqrt(n/(t(t+n)))
    GeneralSurprise = "general-surprise"  # n^2/t
    ExtremalReversibleSurprise = "extremal-reversible-surprise"  # n sqrt(2n)/t
    GraphLogNSurprise = "graph-log-n-surprise"  # 4e n log n / t
    MaxSurprise = "max-surprise"  # (1/t) sum_z max_{s<t} p^s(x,z)
    Composite4 = "composite-4"  # 4/t past 2 t_mix(1/4) ceil(log2 n)
    StationaryStart = "stationary-start"  # P_pi(tau(y) = t) <= 1/t
    StationaryMonotone = "stationary-monotone"  # P_pi(tau = t) - P_pi(tau = t-1) <= 0


PRECONDITIONS = {
    BoundKind.General: "t > n",
    BoundKind.ReversibleLogPi: "reversible, pi(x) > 0, t > 0",
    BoundKind.GraphLogN: "simple-graph walk, n >= 2, t > 0",
    BoundKind.ExtremalReversible: "reversible, t >= 4n + 4",
    BoundKind.PositiveEigen: "reversible, eigenvalues >= 0, t > n",
    BoundKind.Stationary: "unique stationary law, pi(x) > 0, t > 0",
    BoundKind.Composite: "t > s > 0, unique stationary law",
    BoundKind.MaxProbSum: "reversible, certified p*",
    BoundKind.GeomSum: "t >= 1",
    BoundKind.GeneralSurprise: "t > n",
    BoundKind.ExtremalReversibleSurprise: "reversible, t >= 4n + 4",
    BoundKind.GraphLogNSurprise: "simple-graph walk, n >= 2, t > 0",
    BoundKind.MaxSurprise: "t > 0",
    BoundKind.Composite4: "t > 2 t_mix(1/4) ceil(log2 n)",
    BoundKind.StationaryStart: "start from pi, t > 0",
    BoundKind.StationaryMonotone: "start from pi, t >= 1",
}

# kinds whose exact side is the surprise probability rather than a hitting pmf
SURPRISE_KINDS = frozenset(
    {
        BoundKind.GeneralSurprise,
        BoundKind.ExtremalReversibleSurprise,
        BoundKind.GraphLogNSurprise,
    }
)

# friendly aliases accepted by the CLI
ALIASES = {
    "general": [BoundKind.General, BoundKind.GeneralSurprise],
    "reversible": [
        BoundKind.ReversibleLogPi,
        BoundKind.ExtremalReversible,
        BoundKind.ExtremalReversibleSurprise,
        BoundKind.PositiveEigen,
    ],
    "graph": [BoundKind.GraphLogN, BoundKind.GraphLogNSurprise, BoundKind.MaxProbSum, BoundKind.MaxSurprise],
    "stationary": [
        BoundKind.Stationary,
        BoundKind.StationaryStart,
        BoundKind.StationaryMonotone,
        BoundKind.Composite,
        BoundKind.Composite4,
    ],
}


def parse_kinds(spec):
    """Comma-separated kind names or aliases to a sorted tuple of kinds."""
    out = set()
    for tok in (s.strip() for s in spec.split(",")):
        if not tok:
            continue
        if tok == "all":
            out.update(k for k in BoundKind if k is not BoundKind.GeomSum)
        elif tok in ALIASES:
            out.update(ALIASES[tok])
        else:
            out.add(BoundKind(tok))
    return tuple(sorted(out, key=lambda k: k.value))


@dataclass(frozen=True)
class BoundContext:
    """Everything a bound may depend on. Optional fields left ``None`` make
    the kinds that need them inapplicable. Numeric fields may be numpy
    arrays, in which case :func:`bound_array` broadcasts over them."""

    n: int
    t: object
    pi_x: object = None
    reversible: bool = False
    graph: bool = False
    nonneg_eigen: bool = False
    s: object = None
    d_x_s: object = None
    psi: object = None
    pstar_sum: object = None
    certified: bool = False
    t_mix: Optional[int] = None
    stationary_start: bool = False


def psi_general(n, u):
    """Hitting-pmf bound valid for every chain: ``n/u`` once ``u > n``, else 1."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(u > n, np.minimum(1.0, n / np.maximum(u, 1.0)), 1.0)


def psi_best(n, u, reversible=False, pi_min=None):
    """Smallest bound known to hold for every pair (x, y) at lag ``u``."""
    u = np.asarray(u, dtype=np.float64)
    out = psi_general(n, u)
    if reversible and pi_min:
        safe = np.maximum(u, 1.0)
        out = np.minimum(out, np.where(u > 0, 2 * E * max(1.0, math.log(1.0 / pi_min)) / safe, 1.0))
        out = np.minimum(out, np.where(u >= 4 * n + 4, math.sqrt(2 * n) / safe, 1.0))
    return out


def composite4_threshold(n, t_mix):
    """``2 t_mix(1/4) ceil(log2 n)``; the 4/t bound holds strictly above it."""
    return 2 * t_mix * max(1, math.ceil(math.log2(n))) if n > 1 else 0


def _arr(v):
    return np.asarray(np.nan if v is None else v, dtype=np.float64)


def bound_array(kind: BoundKind, ctx: BoundContext):
    """Return ``(value, applicable)`` broadcast over the array fields of
    ``ctx``; ``value`` is NaN wherever the predicate fails."""
    kind = BoundKind(kind)
    n = ctx.n
    t = np.asarray(ctx.t, dtype=np.float64)
    pi = _arr(ctx.pi_x)
    one = np.ones_like(t, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = np.where(t > 0, t, np.nan)
        pi_ok = np.isfinite(pi) & (pi > 0)
        log_pi = np.maximum(1.0, np.log(1.0 / np.where(pi_ok, pi, np.nan)))
        if kind is BoundKind.General:
            ok, val = t > n, n / tt
        elif kind is BoundKind.GeneralSurprise:
            ok, val = t > n, n * n / tt
        elif kind is BoundKind.ReversibleLogPi:
            ok, val = ctx.reversible & pi_ok & (t > 0), 2 * E * log_pi / tt
        elif kind is BoundKind.GraphLogN:
            ok, val = ctx.graph & (n >= 2) & (t > 0), 4 * E * math.log(max(n, 1)) / tt
        elif kind is BoundKind.GraphLogNSurprise:
            ok, val = ctx.graph & (n >= 2) & (t > 0), 4 * E * n * math.log(max(n, 1)) / tt
        elif kind is BoundKind.ExtremalReversible:
            ok, val = ctx.reversible & (t >= 4 * n + 4), math.sqrt(2 * n) / tt
        elif kind is BoundKind.ExtremalReversibleSurprise:
            ok, val = ctx.reversible & (t >= 4 * n + 4), n * math.sqrt(2 * n) / tt
        elif kind is BoundKind.PositiveEigen:
            ok = ctx.reversible & ctx.nonneg_eigen & (t > n)
            val = 0.5 * np.sqrt(n / (tt * (tt - n)))
        elif kind is BoundKind.Stationary:
            ok, val = pi_ok & (t > 0), 1.0 / (tt * pi)
        elif kind is BoundKind.Composite:
            s, d, psi = _arr(ctx.s), _arr(ctx.d_x_s), _arr(ctx.psi)
            ok = np.isfinite(s) & np.isfinite(d) & np.isfinite(psi) & (s > 0) & (s < t)
            val = d * psi + 1.0 / (t - s)
        elif kind is BoundKind.MaxProbSum:
            ok, val = ctx.reversible & ctx.certified & pi_ok & one, 2 * E * log_pi * one
        elif kind is BoundKind.MaxSurprise:
            ps = _arr(ctx.pstar_sum)
            ok, val = np.isfinite(ps) & (t > 0), ps / tt
        elif kind is BoundKind.GeomSum:
            ok, val = t >= 1, 0.5 * np.sqrt(n / (tt * (tt + n)))
        elif kind is BoundKind.Composite4:
            if ctx.t_mix is None:
                ok = ~one
            else:
                ok = t > composite4_threshold(n, ctx.t_mix)
            val = 4.0 / tt
        elif kind is BoundKind.StationaryStart:
            ok, val = ctx.stationary_start & (t > 0), 1.0 / tt
        elif kind is BoundKind.StationaryMonotone:
            ok, val = ctx.stationary_start & (t >= 1), np.zeros_like(t)
        else:  # pragma: no cover
            raise NotApplicable(f"unknown kind {kind!r}")
    ok = np.broadcast_to(ok, np.broadcast(ok, val).shape)
    val = np.where(ok, val, np.nan)
    return val, np.asarray(ok)


def bound_value(kind: BoundKind, ctx: BoundContext) -> float:
    """Scalar bound; raises :class:`NotApplicable` when the predicate of
    ``kind`` fails for ``ctx``."""
    kind = BoundKind(kind)
    val, ok = bound_array(kind, ctx)
    if not bool(np.all(ok)):
        raise NotApplicable(f"{kind.value} needs {PRECONDITIONS[kind]} (n={ctx.n}, t={ctx.t})")
    return float(val)
