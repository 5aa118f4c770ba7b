"""Acceptance suite: twelve criteria, each printed as one PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -v``) or directly with
``python3 tests/test_acceptance.py`` for the summary table alone.
"""

import json
import math
import sys
import time

import numpy as np
import pytest
from scipy.special import gammaln

from hitstat.constructions import (
    cycle_trap,
    cycle_trap_multi,
    g_m_torus,
    pure_birth,
    pure_birth_tail,
    random_reversible,
)
from hitstat.geomsum import (
    basic_geom_bounds,
    geom_sum_bound,
    geom_sum_max_search,
    geom_sum_pmf,
    log_binom_bounds,
    neg_binomial_pmf,
)
from hitstat.harness.bounds import BoundKind as K
from hitstat.harness.experiments import experiment_cycle_pstar, experiment_gm_peak, experiment_gm_scaling
from hitstat.harness.locator import surprise_lower_locator
from hitstat.harness.verify import graph_corpus, random_corpus, reversible_corpus, t_grid_for, verify_family
from hitstat.hitting import hitting_pmf, surprise_pmf
from hitstat.maxprob import starr_check
from hitstat.spectral import killed_return_prob_all, killed_spectrum, reconstruct

# corpus seeds, fixed so every run checks the same chains
SEED_RANDOM = 2024
SEED_LAZY = 2025
SEED_REV = 2026
SEED_GRAPH = 2027


def _corpora():
    return {
        "random": (random_corpus(1000, 10, SEED_RANDOM), 200),
        "lazy-reversible": (reversible_corpus(300, 10, SEED_LAZY, lazy=True), 300),
        "reversible": (reversible_corpus(300, 10, SEED_REV), 300),
        "graph": (graph_corpus(100, 32, SEED_GRAPH), 400),
    }


def _line(num, name, ok, elapsed, budget, detail):
    status = "PASS" if ok else "FAIL"
    return f"C{num:<2} {status}  {name:<34} {elapsed:7.2f}s / {budget:g}s  {detail}"


class Criterion:
    """Times a block, prints its PASS/FAIL line and asserts."""

    def __init__(self, num, name, budget, out):
        self.num, self.name, self.budget, self.out = num, name, budget, out
        self.ok = True
        self.details = []

    def require(self, ok, detail):
        self.ok = self.ok and bool(ok)
        self.details.append(detail if ok else f"[failed] {detail}")

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.ok = False
            self.details.append(f"{exc_type.__name__}: {exc}")
        within = elapsed < self.budget
        self.out(_line(self.num, self.name, self.ok and within, elapsed, self.budget, "; ".join(self.details)))
        if exc_type is None:
            assert self.ok, self.details
            assert within, f"runtime {elapsed:.1f}s over budget {self.budget}s"
        return False


@pytest.fixture
def crit(capsys):
    def out(text):
        with capsys.disabled():
            print("\n" + text)

    return lambda num, name, budget: Criterion(num, name, budget, out)


def test_c01_closed_forms(crit):
    with crit(1, "closed-form reproduction", 1) as c:
        inst = cycle_trap(5, 9)
        d = inst.designated
        v = float(hitting_pmf(inst.chain, d["x"], d["y"], 9).pmf[9])
        c.require(abs(v - 0.125) <= 1e-12, f"cycle_trap(5,9)={v!r}")
        v = float(hitting_pmf(pure_birth(2, 4).chain, 0, 1, 4).pmf[4])
        c.require(abs(v - 0.0625) <= 1e-12, f"pure_birth(2,4)={v!r}")
        v = neg_binomial_pmf(2, 2, 0.5)
        c.require(abs(v - 0.1875) <= 1e-14, f"negbin(2,2,1/2)={v!r}")


def _campaign(c, corpus, kinds, T, label):
    (chains, seeds) = corpus
    rep = verify_family(chains, kinds, t_grid_for(1, T), seeds=seeds)
    counts = ",".join(f"{k.value}:{rep.checked(k.value)}" for k in kinds)
    c.require(rep.passed and all(rep.checked(k.value) > 0 for k in kinds), f"{label} {counts} viol={rep.violations()}")
    return rep


def test_c02_general_suite(crit):
    with crit(2, "bound suite, general", 120) as c:
        _campaign(c, random_corpus(1000, 10, SEED_RANDOM), [K.General, K.GeneralSurprise], 200, "random")


def test_c03_reversible_suite(crit):
    with crit(3, "bound suite, reversible", 180) as c:
        lazy = reversible_corpus(300, 10, SEED_LAZY, lazy=True)
        _campaign(c, lazy, [K.ExtremalReversible, K.PositiveEigen], 300, "lazy")
        _campaign(c, reversible_corpus(300, 10, SEED_REV), [K.ExtremalReversible], 300, "non-lazy")


def test_c04_graph_suite(crit):
    with crit(4, "graph suite", 300) as c:
        _campaign(c, graph_corpus(100, 32, SEED_GRAPH), [K.GraphLogN, K.MaxProbSum, K.MaxSurprise], 400, "graph")


def test_c05_stationary_suite(crit):
    kinds = [K.StationaryStart, K.StationaryMonotone, K.Composite, K.Composite4]
    with crit(5, "stationary and mixing", 120) as c:
        for label, (corpus, T) in _corpora().items():
            _campaign(c, corpus, kinds, T, label)


def test_c06_geometric_suite(crit):
    with crit(6, "geometric sums", 240) as c:
        bad = 0
        for n in range(1, 501):
            for m in range(1, 501):
                lo, hi = basic_geom_bounds(n, m)
                v = neg_binomial_pmf(n, m, n / (m + n))
                bad += not (lo <= v <= hi)
        c.require(bad == 0, f"iid bracket n,m<=500 bad={bad}")

        N = np.arange(1, 10_001, dtype=np.float64)
        bad = 0
        for M in range(1, 10_001):
            lo, hi = log_binom_bounds(M, N)
            exact = gammaln(M + N + 1) - gammaln(M + 1) - gammaln(N + 1)
            # both sides carry rounding of order 1e-16 * |log C|
            slack = 1e-13 * np.maximum(1.0, exact)
            bad += int(np.count_nonzero((lo > exact + slack) | (exact > hi + slack)))
        c.require(bad == 0, f"binomial bracket M,N<=1e4 bad={bad}")

        rng = np.random.default_rng(31)
        bad = 0
        for _ in range(10_000):
            n = int(rng.integers(1, 9))
            t = int(rng.integers(1, 200))
            q = rng.uniform(0.0, 1.0, n)
            bad += geom_sum_pmf(q, t) > geom_sum_bound(n, t) + 1e-15
        c.require(bad == 0, f"heterogeneous 1e4 bad={bad}")

        worst = 0.0
        ok = True
        for n, res in ((2, 1e-3), (3, 1e-2)):
            for t in range(2, 13):
                _, val = geom_sum_max_search(n, t, res)
                eq = geom_sum_pmf([t / (t + n)] * n, t)
                gap = abs(val - eq)
                worst = max(worst, gap / res)
                ok = ok and gap <= 10 * res
        c.require(ok, f"maximizer worst gap {worst:.3f} x resolution")


def test_c07_spectral_suite(crit):
    with crit(7, "killed spectrum", 60) as c:
        rng = np.random.default_rng(7)
        worst_err, min_a, min_lam_lazy = 0.0, np.inf, np.inf
        for i in range(100):
            n = int(rng.integers(2, 17))
            lazy = i % 2 == 1
            chain = random_reversible(n, int(rng.integers(2**31)), 0.5 if lazy else 0.0).chain
            x = int(rng.integers(n))
            U = [s for s in range(n) if s != x and rng.random() < 0.3]
            spec = killed_spectrum(chain, x, U)
            err = np.max(np.abs(reconstruct(spec, np.arange(201)) - killed_return_prob_all(chain, x, U, 200)))
            worst_err = max(worst_err, float(err))
            min_a = min(min_a, float(spec.coefficients.min()))
            if lazy:
                min_lam_lazy = min(min_lam_lazy, float(spec.eigenvalues.min()))
        c.require(worst_err <= 1e-10, f"max err {worst_err:.2e}")
        c.require(min_a >= -1e-12, f"min a {min_a:.2e}")
        c.require(min_lam_lazy >= -1e-12, f"min lazy eigenvalue {min_lam_lazy:.3g}")


def test_c08_starr_suite(crit):
    with crit(8, "even-time maximal inequality", 60) as c:
        rng = np.random.default_rng(8)
        worst = -np.inf
        certified = 0
        for _ in range(50):
            n = int(rng.integers(2, 17))
            chain = random_reversible(n, int(rng.integers(2**31)), 0.5).chain
            x = int(rng.integers(n))
            for p in (1.5, 2.0, 4.0):
                r = starr_check(chain, x, p)
                certified += r.certified
                worst = max(worst, r.ratio - r.bound)
        c.require(certified == 150, f"certified {certified}/150")
        c.require(worst <= 1e-9, f"max ratio - p/(p-1) = {worst:.3g}")


def test_c09_constructions(crit):
    with crit(9, "tightness of constructions", 180) as c:
        bad = cells = 0
        for n in range(2, 65):
            for t in sorted({2 * n - 1, 2 * n, 3 * n + 1, 5 * n, 8 * n + 3}):
                inst = cycle_trap(n, t)
                d = inst.designated
                v = hitting_pmf(inst.chain, d["x"], d["y"], t).pmf[t]
                cells += 1
                bad += v < n / (8 * t)
        c.require(bad == 0, f"cycle_trap {cells} cells bad={bad}")

        bad = 0
        for n in (8, 16, 32, 64):
            for t in (2 * n, 4 * n, 8 * n):
                v = hitting_pmf(pure_birth(n, t).chain, 0, n - 1, t).pmf[t]
                bad += v < math.sqrt(n) / (3 * t)
        small = hitting_pmf(pure_birth(4, 8).chain, 0, 3, 8).pmf[8]
        c.require(bad == 0, f"pure_birth n>=8 bad={bad}, n=4 t=8 exception {small:.6f}=21/256")

        bad = cells = 0
        for n in (4, 8, 16):
            for r in (n, 2 * n, 4 * n):
                for k in (1, n // 2, n):
                    t = r * n + k
                    inst = cycle_trap_multi(n, t)
                    s = surprise_pmf(inst.chain, inst.designated["x"], t).s[t]
                    cells += 1
                    bad += s < n * n / (56 * t)
        c.require(bad == 0, f"cycle_trap_multi {cells} cells bad={bad}")


def test_c10_experiments(crit):
    with crit(10, "experiments", 600) as c:
        for rep in (
            experiment_cycle_pstar([256, 512, 1024]),
            experiment_gm_scaling([3, 4, 5], samples=500, seed=0),
            experiment_gm_peak([3, 4, 5]),
        ):
            bad = [f"{x.name}: {x.detail}" for x in rep.failing()]
            c.require(rep.passed, f"{rep.name} {len(rep.checks)} checks" + (f" {bad}" if bad else ""))


def test_c11_locator(crit):
    with crit(11, "surprise window locator", 300) as c:
        for inst in (pure_birth_tail(16, 64), g_m_torus(3)):
            d = inst.designated
            args = (inst.chain, d["x"], d["y"], d["U"], d["N"])
            ex = surprise_lower_locator(*args)
            c.require(ex.passed, f"{inst.family.value} exact {ex.lhs:.4g}>={ex.rhs:.4g}")
            mc = surprise_lower_locator(*args, method="mc", samples=2000, seed=11)
            c.require(mc.passed, f"mc {mc.lhs:.4g}>={mc.rhs:.4g}")


def test_c12_reproducibility(crit):
    def campaign():
        chains, seeds = reversible_corpus(40, 8, 12, lazy=True)
        rep = verify_family(chains, [K.ExtremalReversible, K.Composite, K.MaxProbSum], t_grid_for(1, 120), seeds=seeds)
        return rep.to_csv(), rep.to_json()

    def mc():
        inst = g_m_torus(2)
        d = inst.designated
        loc = surprise_lower_locator(inst.chain, d["x"], d["y"], d["U"], d["N"], method="mc", samples=300, seed=5)
        return experiment_gm_scaling([3, 4], samples=200, seed=3).to_json() + json.dumps(loc.to_dict())

    with crit(12, "byte-identical reruns", 120) as c:
        a, b = campaign(), campaign()
        c.require(a == b, f"verify csv+json {len(a[0]) + len(a[1])} bytes")
        a, b = mc(), mc()
        c.require(a == b, f"monte carlo reports {len(a)} bytes")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
