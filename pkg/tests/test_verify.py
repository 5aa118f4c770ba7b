import json

import numpy as np
import pytest

from hitstat.constructions import cycle_trap, g_m, random_chain
from hitstat.harness import verify as verify_mod
from hitstat.harness.bounds import BoundKind, parse_kinds
from hitstat.harness.verify import (
    CSV_HEADER,
    VerificationReport,
    graph_corpus,
    random_corpus,
    reversible_corpus,
    t_grid_for,
    verify_family,
)
from hitstat.hitting import hitting_pmf


def test_small_random_campaign_passes():
    corpus, seeds = random_corpus(20, 6, seed=1)
    rep = verify_family(corpus, parse_kinds("general"), t_grid_for(1, 60), seeds=seeds)
    assert rep.passed
    assert rep.checked("general") > 0 and rep.violations() == 0
    assert rep.seeds == seeds


def test_all_kinds_on_each_corpus():
    kinds = parse_kinds("all")
    for corpus, _ in (
        random_corpus(5, 5, 2),
        reversible_corpus(5, 5, 3, lazy=True),
        reversible_corpus(5, 5, 4),
        graph_corpus(5, 8, 5),
    ):
        rep = verify_family(corpus, kinds, t_grid_for(1, 80))
        assert rep.passed, rep.failing_rows[:3]


def test_worst_row_is_min_slack():
    inst = random_chain(4, 11)
    rep = verify_family([inst], [BoundKind.General], range(5, 41))
    for row in rep.rows:
        x, y = int(row.x), int(row.y)
        p = hitting_pmf(inst.chain, x, y, 40).pmf[5:]
        slack = 4 / np.arange(5, 41) - p
        assert row.slack == pytest.approx(slack.min(), abs=1e-15)
        assert row.t == 5 + int(np.argmin(slack))


def test_detail_keeps_every_cell():
    inst = random_chain(3, 0)
    rep = verify_family([inst], [BoundKind.General], range(1, 21), detail=True)
    # 3 x 3 pairs, t in 4..20
    assert len(rep.rows) == 9 * 17
    assert rep.checked("general") == 9 * 17


def test_violation_is_reported(monkeypatch):
    real = verify_mod.bound_array

    def broken(kind, ctx):
        val, ok = real(kind, ctx)
        return val * 1e-6, ok

    monkeypatch.setattr(verify_mod, "bound_array", broken)
    rep = verify_family([cycle_trap(5, 9)], [BoundKind.General], range(1, 20))
    assert not rep.passed
    bad = rep.failing_rows
    assert bad and all(not r.passed and r.slack < 0 for r in bad)
    assert rep.violations("general") > 0


def test_designated_policy():
    inst = cycle_trap(5, 9)
    rep = verify_family([inst], [BoundKind.General], range(1, 20), xy_policy="designated")
    assert {(r.x, r.y) for r in rep.rows} == {(str(inst.designated["x"]), str(inst.designated["y"]))}
    with pytest.raises(ValueError):
        verify_family([inst], [BoundKind.General], range(1, 20), xy_policy="bogus")


def test_csv_and_json_shape():
    corpus, seeds = random_corpus(3, 4, 0)
    rep = verify_family(corpus, parse_kinds("general"), range(1, 30), seeds=seeds)
    lines = rep.to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert all(len(l.split(",")) == 10 for l in lines[1:])
    doc = json.loads(rep.to_json())
    assert doc["passed"] is True
    assert "timestamp" not in doc and doc["seeds"] == seeds


def test_byte_identical_rerun():
    def run():
        corpus, seeds = reversible_corpus(6, 6, 9, lazy=True)
        return verify_family(corpus, parse_kinds("reversible,stationary"), range(1, 50), seeds=seeds)

    a, b = run(), run()
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()


def test_merge_reports():
    c1, _ = random_corpus(3, 4, 0)
    c2, _ = random_corpus(3, 4, 1)
    kinds = parse_kinds("general")
    a = verify_family(c1, kinds, range(1, 20))
    b = verify_family(c2, kinds, range(1, 20))
    both = verify_family(c1 + c2, kinds, range(1, 20))
    merged = VerificationReport(grid=a.grid)
    merged.merge(a)
    merged.merge(b)
    merged.finalize()
    assert merged.checked("general") == both.checked("general")
    assert merged.to_csv() == both.to_csv()


def test_maxprob_kind_on_graph():
    rep = verify_family([g_m(2)], [BoundKind.MaxProbSum], range(1, 5))
    # G_m is bipartite, so p* sums are not certifiable
    assert rep.checked("maxprob-sum") == 0
    corpus, _ = graph_corpus(5, 8, 3)
    rep = verify_family(corpus, [BoundKind.MaxProbSum, BoundKind.MaxSurprise], range(1, 40))
    assert rep.passed


def test_corpora_are_seeded():
    a, sa = random_corpus(4, 6, 5)
    b, sb = random_corpus(4, 6, 5)
    assert sa == sb and [i.chain.rows for i in a] == [i.chain.rows for i in b]
    g, _ = graph_corpus(4, 10, 1)
    assert all(3 <= i.chain.n <= 10 for i in g)
