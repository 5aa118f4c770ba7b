import math

import numpy as np
import pytest

from hitstat.errors import NotApplicable
from hitstat.harness.bounds import (
    ALIASES,
    BoundContext,
    BoundKind,
    PRECONDITIONS,
    bound_array,
    bound_value,
    composite4_threshold,
    parse_kinds,
    psi_best,
    psi_general,
)


def test_every_kind_has_precondition():
    assert set(PRECONDITIONS) == set(BoundKind)


@pytest.mark.parametrize(
    "kind, ctx, want",
    [
        (BoundKind.General, BoundContext(10, 100), 0.1),
        (BoundKind.GeneralSurprise, BoundContext(10, 200), 0.5),
        (BoundKind.ExtremalReversible, BoundContext(10, 44, reversible=True), math.sqrt(20) / 44),
        (BoundKind.ExtremalReversibleSurprise, BoundContext(10, 44, reversible=True), 10 * math.sqrt(20) / 44),
        (BoundKind.GraphLogN, BoundContext(2, 1, graph=True), 4 * math.e * math.log(2)),
        (BoundKind.GraphLogNSurprise, BoundContext(4, 8, graph=True), 4 * math.e * 4 * math.log(4) / 8),
        (BoundKind.ReversibleLogPi, BoundContext(5, 10, pi_x=0.5, reversible=True), 2 * math.e / 10),
        (BoundKind.ReversibleLogPi, BoundContext(5, 10, pi_x=0.01, reversible=True), 2 * math.e * math.log(100) / 10),
        (BoundKind.PositiveEigen, BoundContext(4, 8, reversible=True, nonneg_eigen=True), 0.5 * math.sqrt(4 / 32)),
        (BoundKind.Stationary, BoundContext(4, 8, pi_x=0.25), 0.5),
        (BoundKind.GeomSum, BoundContext(3, 9), 0.5 * math.sqrt(3 / 108)),
        (BoundKind.MaxSurprise, BoundContext(3, 4, pstar_sum=2.0), 0.5),
        (BoundKind.StationaryStart, BoundContext(3, 4, stationary_start=True), 0.25),
        (BoundKind.StationaryMonotone, BoundContext(3, 4, stationary_start=True), 0.0),
        (
            BoundKind.MaxProbSum,
            BoundContext(3, 10, pi_x=math.exp(-2), reversible=True, certified=True),
            2 * math.e * 2,
        ),
        (BoundKind.Composite4, BoundContext(8, 100, t_mix=3), 0.04),
    ],
)
def test_values(kind, ctx, want):
    assert bound_value(kind, ctx) == pytest.approx(want, rel=1e-14)


def test_composite_value():
    ctx = BoundContext(10, 30, s=10, d_x_s=0.25, psi=0.2)
    assert bound_value(BoundKind.Composite, ctx) == pytest.approx(0.25 * 0.2 + 1 / 20)


@pytest.mark.parametrize(
    "kind, ctx",
    [
        (BoundKind.General, BoundContext(10, 10)),
        (BoundKind.GeneralSurprise, BoundContext(10, 5)),
        (BoundKind.ExtremalReversible, BoundContext(10, 43, reversible=True)),
        (BoundKind.ExtremalReversible, BoundContext(10, 100)),
        (BoundKind.GraphLogN, BoundContext(5, 10)),
        (BoundKind.ReversibleLogPi, BoundContext(5, 10, reversible=True)),
        (BoundKind.PositiveEigen, BoundContext(5, 10, reversible=True)),
        (BoundKind.Stationary, BoundContext(5, 10, pi_x=0.0)),
        (BoundKind.Composite, BoundContext(5, 10, s=10, d_x_s=0.1, psi=0.1)),
        (BoundKind.MaxProbSum, BoundContext(5, 10, pi_x=0.2, reversible=True)),
        (BoundKind.Composite4, BoundContext(8, 18, t_mix=3)),
        (BoundKind.Composite4, BoundContext(8, 100)),
        (BoundKind.StationaryStart, BoundContext(8, 100)),
    ],
)
def test_not_applicable(kind, ctx):
    with pytest.raises(NotApplicable):
        bound_value(kind, ctx)


def test_array_broadcast_marks_nan():
    val, ok = bound_array(BoundKind.General, BoundContext(5, np.arange(1, 11)))
    assert ok.tolist() == [False] * 5 + [True] * 5
    assert np.isnan(val[:5]).all()
    assert np.allclose(val[5:], 5 / np.arange(6, 11))


def test_psi_functions():
    u = np.array([0, 5, 11, 100])
    assert psi_general(10, u).tolist() == [1.0, 1.0, 10 / 11, 0.1]
    best = psi_best(10, u, reversible=True, pi_min=0.1)
    assert np.all(best <= psi_general(10, u))
    assert best[-1] == pytest.approx(min(0.1, 2 * math.e * math.log(10) / 100, math.sqrt(20) / 100))


def test_composite4_threshold():
    assert composite4_threshold(8, 3) == 18
    assert composite4_threshold(9, 3) == 24
    assert composite4_threshold(1, 3) == 0


def test_parse_kinds():
    assert parse_kinds("general") == tuple(sorted(ALIASES["general"], key=lambda k: k.value))
    assert parse_kinds("general,stationary")[0] is BoundKind.Composite
    kinds = parse_kinds("all")
    assert BoundKind.GeomSum not in kinds and len(kinds) == len(BoundKind) - 1
    assert parse_kinds("geom-sum") == (BoundKind.GeomSum,)
    with pytest.raises(ValueError):
        parse_kinds("bogus")
