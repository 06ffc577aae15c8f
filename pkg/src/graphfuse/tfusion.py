"""Gibbs sampler for Bayesian fusion under a t-shrinkage prior on chain differences.

Model, with the chain produced by :func:`graphfuse.graph.dfs_chain`::

    y_i | theta, sigma2            ~ N(theta_i, sigma2)
    theta_root | sigma2            ~ N(0, lambda0 * sigma2)
    theta_i - theta_j | lam_k, s2  ~ N(0, lam_k * sigma2)   for chain link k = (i, j)
    lam_k                          ~ IG(a_t, b_t)
    sigma2                         ~ IG(a_sigma, b_sigma)

Integrating out ``lam_k`` gives a Student-t prior with ``2 * a_t`` degrees of
freedom on each difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from . import _kernels
from .distributions import Hyperparams, default_hyperparams, sample_inverse_gamma
from .graph import ChainOrder

SIGMA2_INIT_FLOOR = 1e-8


@dataclass(frozen=True)
class ChainData:
    y: np.ndarray
    chain: ChainOrder
    hyper: Hyperparams

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ValueError("y must be a vector")
        if y.shape[0] != self.chain.n:
            raise ValueError(f"y has length {y.shape[0]} but the chain covers {self.chain.n} nodes")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite values")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @cached_property
    def order(self) -> np.ndarray:
        return self.chain.order_array()

    @cached_property
    def y_chain(self) -> np.ndarray:
        return self.y[self.order]

    @property
    def root(self) -> int:
        return self.chain.root


def make_chain_data(y, chain: ChainOrder, hyper: Hyperparams | None = None) -> ChainData:
    y = np.asarray(y, dtype=float)
    if hyper is None:
        hyper = default_hyperparams(y.shape[0])
    return ChainData(y=y, chain=chain, hyper=hyper)


@dataclass(frozen=True)
class FusionState:
    """Current sampler values.

    ``theta`` is in original node order; ``lam[k]`` belongs to chain link k
    (between chain slots k and k+1).
    """

    theta: np.ndarray
    lam: np.ndarray
    sigma2: float

    def __post_init__(self):
        if np.any(self.lam <= 0):
            raise ValueError("edge scales must be > 0")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")


@dataclass
class PosteriorSamples:
    draws: np.ndarray          # (kept, n) theta draws, original node order
    sigma2_draws: np.ndarray   # (kept,)
    meta: dict = field(default_factory=dict)

    @property
    def num_draws(self) -> int:
        return self.draws.shape[0]


def init_state(data: ChainData) -> FusionState:
    y = data.y
    s2 = float(np.var(y, ddof=1)) if y.shape[0] > 1 else 0.0
    h = data.hyper
    lam = np.full(max(data.n - 1, 0), h.b_t / (h.a_t + 0.5))
    return FusionState(theta=y.copy(), lam=lam, sigma2=max(s2, SIGMA2_INIT_FLOOR))


def chain_differences(theta: np.ndarray, data: ChainData) -> np.ndarray:
    tc = theta[data.order]
    return tc[1:] - tc[:-1]


def sigma2_rate(theta: np.ndarray, scales: np.ndarray, data: ChainData) -> float:
    h = data.hyper
    d = chain_differences(theta, data)
    resid = data.y - theta
    root = theta[data.root]
    return float(
        h.b_sigma
        + root * root / (2.0 * h.lambda0)
        + 0.5 * resid @ resid
        + 0.5 * np.sum(d * d / scales)
    )


def update_lambdas(state: FusionState, data: ChainData, rng: np.random.Generator) -> FusionState:
    h = data.hyper
    d = chain_differences(state.theta, data)
    rate = h.b_t + d * d / (2.0 * state.sigma2)
    lam = sample_inverse_gamma(h.a_t + 0.5, rate, rng, size=d.shape)
    return replace(state, lam=lam)


def update_sigma2(state: FusionState, data: ChainData, rng: np.random.Generator) -> FusionState:
    # n/2 from the likelihood, (n-1)/2 from the links, 1/2 from the root prior
    shape = data.hyper.a_sigma + data.n
    rate = sigma2_rate(state.theta, state.lam, data)
    return replace(state, sigma2=float(sample_inverse_gamma(shape, rate, rng)))


def update_thetas(state: FusionState, data: ChainData, rng: np.random.Generator) -> FusionState:
    z = rng.standard_normal(data.n)
    theta_c = state.theta[data.order]
    _kernels.theta_sweep(theta_c, data.y_chain, state.lam, state.sigma2, data.hyper.lambda0, z)
    theta = np.empty_like(theta_c)
    theta[data.order] = theta_c
    return replace(state, theta=theta)


def conditional_moments(theta: np.ndarray, lam: np.ndarray, sigma2: float, data: ChainData):
    """Mean and variance of each theta_i given all other thetas (no sampling)."""
    n = data.n
    tc = theta[data.order]
    yc = data.y_chain
    prec = np.ones(n)
    num = yc.copy()
    prec[0] += 1.0 / data.hyper.lambda0
    if n > 1:
        w = 1.0 / lam
        prec[1:] += w
        num[1:] += w * tc[:-1]
        prec[:-1] += w
        num[:-1] += w * tc[1:]
    mu_c = num / prec
    var_c = sigma2 / prec
    mu = np.empty(n)
    var = np.empty(n)
    mu[data.order] = mu_c
    var[data.order] = var_c
    return mu, var


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_counts(iterations: int, burn_in: int, thin: int) -> None:
    if burn_in < 0 or iterations <= burn_in:
        raise ValueError("need iterations > burn_in >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")


def gibbs_loop(
    data: ChainData,
    state: FusionState,
    update_scales: Callable[[FusionState, ChainData, np.random.Generator], FusionState],
    iterations: int,
    burn_in: int,
    thin: int,
    rng: np.random.Generator,
    meta: dict,
) -> PosteriorSamples:
    _check_counts(iterations, burn_in, thin)
    kept = len(range(burn_in, iterations, thin))
    draws = np.empty((kept, data.n))
    s2 = np.empty(kept)
    row = 0
    for it in range(iterations):
        state = update_scales(state, data, rng)
        state = update_sigma2(state, data, rng)
        state = update_thetas(state, data, rng)
        if it >= burn_in and (it - burn_in) % thin == 0:
            draws[row] = state.theta
            s2[row] = state.sigma2
            row += 1
    meta = dict(meta, root=data.root, iterations=iterations, burn_in=burn_in, thin=thin)
    return PosteriorSamples(draws=draws, sigma2_draws=s2, meta=meta)


def run_gibbs(
    data: ChainData,
    iterations: int = 6000,
    burn_in: int = 1000,
    thin: int = 1,
    seed=0,
) -> PosteriorSamples:
    """Run the t-fusion sampler; identical ``seed`` gives identical draws."""
    _check_counts(iterations, burn_in, thin)
    rng = make_rng(seed)
    meta = {"method": "t", "seed": seed if not isinstance(seed, np.random.Generator) else None}
    return gibbs_loop(data, init_state(data), update_lambdas, iterations, burn_in, thin, rng, meta)
