import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hitstat.constructions import pure_birth
from hitstat.errors import BadParams, NotIrreducible, NotReversible, StateInU
from hitstat.geomsum import geom_mixture_pmf
from hitstat.hitting import hitting_pmf
from hitstat.spectral import (
    killed_return_prob,
    killed_return_prob_all,
    killed_spectrum,
    reconstruct,
    spectrum_to_mixture,
)
from oracles import chain_of, rand_reversible, rand_stochastic


def _killed_powers(P, x, U, T):
    keep = np.ones(len(P), dtype=bool)
    keep[list(U)] = False
    Q = P * keep[None, :]
    out = []
    M = np.eye(len(P))
    for _ in range(T + 1):
        out.append(M[x, x])
        M = M @ Q
    return np.array(out)


def test_two_state_example():
    a = 0.3
    c = chain_of([[1 - a, a], [0.4, 0.6]])
    spec = killed_spectrum(c, 0, [1])
    assert len(spec.terms) == 1
    assert spec.terms[0] == pytest.approx((1.0, 0.7))
    assert reconstruct(spec, 3) == pytest.approx(0.7**3, rel=1e-14)


@pytest.mark.parametrize("seed", range(8))
def test_dp_matches_matrix_powers(seed):
    rng = np.random.default_rng(seed)
    P = rand_stochastic(7, rng, 0.6)
    U = [5, 6]
    got = killed_return_prob_all(chain_of(P), 0, U, 50)
    assert np.allclose(got, _killed_powers(P, 0, U, 50), atol=1e-15)
    assert killed_return_prob(chain_of(P), 0, U, 7) == pytest.approx(got[7], abs=1e-16)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.booleans())
def test_reconstruction_property(n, seed, lazy):
    rng = np.random.default_rng(seed)
    P = rand_reversible(n, rng, lazy=0.5 if lazy else 0.0)
    c = chain_of(P)
    x = int(rng.integers(n))
    others = [s for s in range(n) if s != x]
    U = [s for s in others if rng.random() < 0.4]
    spec = killed_spectrum(c, x, U)
    ts = np.arange(201)
    err = np.max(np.abs(reconstruct(spec, ts) - killed_return_prob_all(c, x, U, 200)))
    assert err <= 1e-10
    assert spec.coefficients.min() >= -1e-12
    # t = 0 gives total weight one
    assert spec.coefficients.sum() == pytest.approx(1.0, abs=1e-12)
    if lazy:
        assert spec.eigenvalues.min() >= -1e-12
        assert spec.nonneg_eigen


def test_terms_sorted_and_json():
    P = rand_reversible(6, np.random.default_rng(3))
    spec = killed_spectrum(chain_of(P), 0, [5])
    lam = spec.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    doc = json.loads(spec.to_json())
    assert len(doc["terms"]) == len(spec.terms)
    assert doc["nonneg_eigen"] == spec.nonneg_eigen


def test_empty_U_is_plain_return_probability():
    P = rand_reversible(5, np.random.default_rng(4))
    spec = killed_spectrum(chain_of(P), 2, [])
    want = np.array([np.linalg.matrix_power(P, t)[2, 2] for t in range(40)])
    assert np.allclose(reconstruct(spec, np.arange(40)), want, atol=1e-12)


def test_start_in_U():
    P = rand_reversible(4, np.random.default_rng(0))
    with pytest.raises(StateInU):
        killed_spectrum(chain_of(P), 1, [1, 2])
    with pytest.raises(StateInU):
        killed_return_prob_all(chain_of(P), 1, [1], 5)


def test_non_reversible_rejected():
    P = np.array([[0.1, 0.6, 0.3], [0.3, 0.1, 0.6], [0.6, 0.3, 0.1]])
    with pytest.raises(NotReversible):
        killed_spectrum(chain_of(P), 0, [])


def test_transient_start_needs_loose_mode():
    inst = pure_birth(4, 8)
    with pytest.raises(NotIrreducible):
        killed_spectrum(inst.chain, 0, [1])
    spec = killed_spectrum(inst.chain, 0, [1], strict=False)
    assert len(spec.terms) == 1
    assert spec.terms[0] == pytest.approx((1.0, 0.5))


def test_loose_mode_detects_one_way_edge():
    # 0 <-> 1 symmetric inside the killed class: accepted
    P = np.array([[0.4, 0.3, 0.3], [0.3, 0.4, 0.3], [0.0, 0.0, 1.0]])
    killed_spectrum(chain_of(P), 0, [2], strict=False)
    # rotating cycle 0 -> 1 -> 2 -> 0 has no reversing measure
    C = np.array([[0.2, 0.8, 0.0], [0.0, 0.2, 0.8], [0.8, 0.0, 0.2]])
    with pytest.raises(NotReversible):
        killed_spectrum(chain_of(C), 0, [], strict=False)


def test_mixture_weights():
    P = rand_reversible(6, np.random.default_rng(5), lazy=0.5)
    spec = killed_spectrum(chain_of(P), 0, [4, 5])
    mix = spectrum_to_mixture(spec)
    assert abs(sum(w for w, _ in mix) - 1) < 1e-15
    assert all(0 <= q < 1 for _, q in mix)


def test_mixture_rejects_negative_eigen():
    # period-2 flip has eigenvalue -1
    spec = killed_spectrum(chain_of([[0.0, 1.0], [1.0, 0.0]]), 0, [])
    with pytest.raises(BadParams):
        spectrum_to_mixture(spec)


@pytest.mark.parametrize("n, t", [(4, 8), (6, 15), (8, 30)])
def test_mixture_bridge_reproduces_pure_birth(n, t):
    # tau from state 1 to n is (n - 1) holding excursions plus n - 1 advances
    inst = pure_birth(n, t)
    c = inst.chain
    mixtures = []
    for i in range(n - 1):
        spec = killed_spectrum(c, i, [i + 1], strict=False)
        mixtures.append(spectrum_to_mixture(spec))
    exact = hitting_pmf(c, 0, n - 1, t).pmf[t]
    assert geom_mixture_pmf(mixtures, t - (n - 1)) == pytest.approx(exact, rel=1e-12)
    assert inst.closed_forms["hit_pmf_at_t"] == pytest.approx(exact, rel=1e-12)
