"""Exact first-hitting-time and surprise probabilities for finite Markov chains."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .chain import ChainSpec, evolve, is_reversible, lazy, load_chain, mixing_profile, stationary, validate
from .hitting import (
    expected_hitting,
    hitting_pmf,
    loop_erase,
    mc_hitting_moments,
    sample_path,
    stationary_hitting_pmf,
    surprise_pmf,
)
from .geomsum import GeomParams, geom_sum_max_search, geom_sum_pmf, log_neg_binomial_pmf, neg_binomial_pmf
from .maxprob import maximal_row, starr_check
from .spectral import killed_spectrum, reconstruct, spectrum_to_mixture
from .constructions import Family, FamilyInstance, build
