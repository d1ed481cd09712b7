"""Bayesian interpolative decomposition with Gibbs sampling (GBT) and its
importance-intervened variant (IID), plus an alpha-selection backtest."""
from .core import DataMatrix, Decomposition, Hyperparams, postprocess
from .gibbs import ChainConfig, Trace, run_chain, top_m_select
from .importance import squash
from .rid import randomized_id

__all__ = [
    "ChainConfig",
    "DataMatrix",
    "Decomposition",
    "Hyperparams",
    "Trace",
    "postprocess",
    "randomized_id",
    "run_chain",
    "squash",
    "top_m_select",
]
