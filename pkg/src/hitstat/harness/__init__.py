"""Bound verification campaigns, the surprise locator and experiments."""

from .bounds import BoundContext, BoundKind, bound_value, parse_kinds
from .verify import VerificationReport, graph_corpus, random_corpus, reversible_corpus, verify_family
