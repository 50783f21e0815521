"""deckrec: population recovery from the deletion channel.

Exact-rational models of string populations and their k-decks, a
reproducible deletion-channel sampler, a deck-distance recovery
algorithm over quantized candidate grids, the Chebyshev-based
polynomial separation pipeline, and moment-matched binomial-mixture
constructions with exact trace-distribution total variation.
"""

__version__ = "0.1.0"

from .model import Population, Restriction, restrict, tv_distance, quantize
from .channel import ChannelParams, TraceBatch, apply_deletion, sample_traces
from .deck import (
    Deck,
    count_occurrences,
    exact_deck_string,
    exact_deck_population,
    estimate_deck,
    deck_distance,
    minimal_distinguishing_k,
)
from .recovery import RecoveryConfig, RecoveryResult, required_sample_size, enumerate_candidates, recover

__all__ = [
    "Population",
    "Restriction",
    "restrict",
    "tv_distance",
    "quantize",
    "ChannelParams",
    "TraceBatch",
    "apply_deletion",
    "sample_traces",
    "Deck",
    "count_occurrences",
    "exact_deck_string",
    "exact_deck_population",
    "estimate_deck",
    "deck_distance",
    "minimal_distinguishing_k",
    "RecoveryConfig",
    "RecoveryResult",
    "required_sample_size",
    "enumerate_candidates",
    "recover",
]
