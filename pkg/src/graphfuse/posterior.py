"""Posterior summaries, multi-root pooling, sparsification and change points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import Hyperparams, default_hyperparams, student_t_quantile
from .graph import ChainOrder, Graph, GraphError, dfs_chain
from .laplace import run_laplace_gibbs
from .tfusion import PosteriorSamples, make_chain_data, run_gibbs


@dataclass(frozen=True)
class PosteriorSummary:
    theta_mean: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    sigma_hat: float
    level: float


@dataclass(frozen=True)
class BlockPartition:
    labels: np.ndarray                 # block id per node
    boundaries: tuple[int, ...]        # chain positions t with a break between order[t] and order[t+1]
    threshold: float

    @property
    def num_blocks(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass(frozen=True)
class SamplerConfig:
    method: str = "t"
    iterations: int = 6000
    burn_in: int = 1000
    thin: int = 1

    def __post_init__(self):
        if self.method not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.method!r}; expected one of {sorted(SAMPLERS)}")


SAMPLERS = {"t": run_gibbs, "laplace": run_laplace_gibbs}


def summarize(samples: PosteriorSamples, level: float = 0.95) -> PosteriorSummary:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    draws = samples.draws
    if draws.shape[0] == 0:
        raise ValueError("no posterior draws to summarize")
    lo, hi = np.quantile(draws, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return PosteriorSummary(
        theta_mean=draws.mean(axis=0),
        band_lo=lo,
        band_hi=hi,
        sigma_hat=float(np.sqrt(samples.sigma2_draws).mean()),
        level=level,
    )


def derive_seed(seed, *keys: int) -> list[int]:
    """Entropy list for ``np.random.default_rng``; distinct keys give independent streams.

    ``seed`` may itself be a derived list, so derivations nest.
    """
    base = [int(s) for s in seed] if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [int(k) for k in keys]


def run_chain(y, chain: ChainOrder, config: SamplerConfig, hyper: Hyperparams | None, seed) -> PosteriorSamples:
    data = make_chain_data(y, chain, hyper)
    return SAMPLERS[config.method](data, config.iterations, config.burn_in, config.thin, seed)


def pool_roots(
    y,
    graph: Graph,
    roots: Sequence[int],
    config: SamplerConfig = SamplerConfig(),
    hyper: Hyperparams | None = None,
    seed: int = 0,
    return_parts: bool = False,
):
    """Run one sampler per DFS root and stack the kept draws.

    Root ``i`` in ``roots`` uses the seed ``derive_seed(seed, i)``.
    """
    if len(roots) == 0:
        raise ValueError("need at least one root")
    for r in roots:
        if not 0 <= r < graph.n:
            raise GraphError(f"root {r} outside [0, {graph.n})")
    y = np.asarray(y, dtype=float)
    if hyper is None:
        hyper = default_hyperparams(graph.n)
    parts = [
        run_chain(y, dfs_chain(graph, int(r)), config, hyper, derive_seed(seed, i))
        for i, r in enumerate(roots)
    ]
    pooled = PosteriorSamples(
        draws=np.vstack([p.draws for p in parts]),
        sigma2_draws=np.concatenate([p.sigma2_draws for p in parts]),
        meta={
            "method": config.method,
            "seed": seed,
            "roots": [int(r) for r in roots],
            "iterations": config.iterations,
            "burn_in": config.burn_in,
            "thin": config.thin,
        },
    )
    return (pooled, parts) if return_parts else pooled


def sparsify_threshold(hyper: Hyperparams, n: int) -> float:
    return hyper.m * student_t_quantile(1.0 - 1.0 / (2.0 * n), 2.0 * hyper.a_t)


def partition_from_breaks(breaks: np.ndarray, chain: ChainOrder, threshold: float) -> BlockPartition:
    block_c = np.concatenate([[0], np.cumsum(breaks)]).astype(np.int64)
    labels = np.empty(chain.n, dtype=np.int64)
    labels[chain.order_array()] = block_c
    return BlockPartition(labels=labels, boundaries=tuple(int(t) for t in np.flatnonzero(breaks)), threshold=threshold)


def sparsify(summary: PosteriorSummary, hyper: Hyperparams, n: int, chain: ChainOrder) -> BlockPartition:
    """Fuse chain neighbours whose standardized posterior-mean gap is at most m * t-quantile."""
    if not summary.sigma_hat > 0:
        raise ValueError("sigma_hat must be > 0")
    if summary.theta_mean.shape[0] != n or chain.n != n:
        raise ValueError("summary, n and chain disagree on the number of nodes")
    tau = sparsify_threshold(hyper, n)
    tc = summary.theta_mean[chain.order_array()]
    gaps = np.abs(np.diff(tc)) / summary.sigma_hat
    return partition_from_breaks(gaps > tau, chain, tau)


def change_points(partition: BlockPartition, chain: ChainOrder) -> list[int]:
    """Node ids ``order[t]`` after which the block label changes along the chain."""
    order = chain.order
    lab = partition.labels
    return [order[t] for t in range(chain.n - 1) if lab[order[t]] != lab[order[t + 1]]]


def block_means(values, partition: BlockPartition) -> np.ndarray:
    """Replace each node value by the average over its block."""
    values = np.asarray(values, dtype=float)
    k = partition.num_blocks
    sums = np.bincount(partition.labels, weights=values, minlength=k)
    counts = np.bincount(partition.labels, minlength=k)
    return (sums / counts)[partition.labels]
