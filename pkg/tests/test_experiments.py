import json
import math

import pytest

from hitstat.errors import BadParams
from hitstat.harness.experiments import (
    cycle_pstar_sum,
    exact_gm_moments,
    experiment_cycle_pstar,
    experiment_gm_peak,
    experiment_gm_scaling,
    gm_peak,
)
from hitstat.hitting import hitting_pmf
from hitstat.constructions import g_m


def test_cycle_pstar_small():
    rep = experiment_cycle_pstar([16, 32, 64], asserted=(32, 64))
    assert rep.passed, rep.failing()
    sums = [r["pstar_sum"] for r in rep.records]
    assert sums == sorted(sums)
    assert rep.records[0]["ratio_to_log_n"] == pytest.approx(sums[0] / math.log(16))


def test_cycle_pstar_tiny_closed_form():
    # 4-cycle from 0: p*(0,0)=1, p*(0,1)=p*(0,3)=1/2, p*(0,2)=1/2
    assert cycle_pstar_sum(4, 64) == pytest.approx(2.5, abs=1e-15)


def test_cycle_pstar_validation():
    with pytest.raises(BadParams):
        experiment_cycle_pstar([15])


@pytest.mark.parametrize("m, mean", [(3, 193.0), (4, 1269.0)])
def test_exact_gm_mean(m, mean):
    got, var = exact_gm_moments(m)
    assert got == pytest.approx(mean, rel=1e-10)
    res = hitting_pmf(g_m(m).chain, 2**m - 1, 0, 60 * m * 4**m)
    assert res.tail < 1e-9
    t = range(len(res.pmf))
    assert sum(k * p for k, p in zip(t, res.pmf)) == pytest.approx(mean, rel=1e-8)


def test_gm_scaling_small():
    rep = experiment_gm_scaling([3], samples=300, seed=0)
    assert rep.records[0]["exact_mean"] == pytest.approx(193.0)
    assert {c.name for c in rep.checks} >= {"m=3 exact mean inside 99% CI"}
    doc = json.loads(rep.to_json())
    assert doc["experiment"] == "gm-scaling"
    assert rep.to_json() == experiment_gm_scaling([3], samples=300, seed=0).to_json()
    with pytest.raises(BadParams):
        experiment_gm_scaling([3], samples=10)


def test_gm_peak_m3():
    peak, n, T, tail = gm_peak(3)
    assert n == 52 and tail <= 1e-6
    pmf = hitting_pmf(g_m(3).chain, 7, 0, T).pmf
    assert peak == pytest.approx(max(t * p for t, p in enumerate(pmf)), rel=1e-14)
    rep = experiment_gm_peak([3, 4])
    assert rep.passed
    with pytest.raises(BadParams):
        gm_peak(6)
