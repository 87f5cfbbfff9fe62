"""Seasonal mobility profiling from call detail records."""

import json as _json

from . import _core
from ._core import (
    InputError,
    InvariantError,
    MissingStageError,
    bit_distance,
    cluster,
    detect_spikes,
    haversine_km,
    lagged_correlation,
    permutation_p_value,
    select_periods,
    upgma,
)

__version__ = _core.__version__

STAGES = ("synth", "ingest", "homes", "features", "filter", "cluster", "detect", "markov", "calendar")


def run(config, out, stage="all", seed=None):
    """Runs one stage, or every stage for "all". Returns one dict per stage run."""
    return _core.run(str(config), str(out), stage, seed)


def expanded_config(config, seed=None):
    """Configuration with every default filled in, as a dict."""
    return _json.loads(_core.expanded_config(str(config), seed))


def fit_markov(vectors):
    """Stationary transition model from monthly home vectors (12 entries, None for missing)."""
    return _json.loads(_core.fit_markov(vectors))


def nonstationarity_report(vectors, seed=0, simulations=20):
    return _json.loads(_core.nonstationarity_report(vectors, seed, simulations))


__all__ = [
    "InputError",
    "InvariantError",
    "MissingStageError",
    "STAGES",
    "bit_distance",
    "cluster",
    "detect_spikes",
    "expanded_config",
    "fit_markov",
    "haversine_km",
    "lagged_correlation",
    "nonstationarity_report",
    "permutation_p_value",
    "run",
    "select_periods",
    "upgma",
]
