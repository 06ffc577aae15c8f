"""Piecewise-constant graph signal denoising with t-shrinkage fusion priors.

A graph is reduced to a path by depth-first search, a Gibbs sampler fits a
Bayesian fusion model with Student-t priors on successive differences, and
the posterior mean is sparsified into blocks and change points. Laplace-prior
and fused-lasso fits on the same path serve as baselines.
"""

from .distributions import Hyperparams, default_hyperparams, student_t_quantile
from .graph import ChainOrder, Graph, GraphError, dfs_chain, is_connected, new_graph, total_variation
from .laplace import run_laplace_gibbs
from .posterior import (
    BlockPartition,
    PosteriorSummary,
    SamplerConfig,
    change_points,
    pool_roots,
    sparsify,
    summarize,
)
from .tfusion import ChainData, FusionState, PosteriorSamples, make_chain_data, run_gibbs
from .tv import TvSolution, choose_lambda_cv, tv_denoise_chain

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "ChainData",
    "ChainOrder",
    "FusionState",
    "Graph",
    "GraphError",
    "Hyperparams",
    "PosteriorSamples",
    "PosteriorSummary",
    "SamplerConfig",
    "TvSolution",
    "change_points",
    "choose_lambda_cv",
    "default_hyperparams",
    "dfs_chain",
    "is_connected",
    "make_chain_data",
    "new_graph",
    "pool_roots",
    "run_gibbs",
    "run_laplace_gibbs",
    "sparsify",
    "student_t_quantile",
    "summarize",
    "total_variation",
    "tv_denoise_chain",
]
