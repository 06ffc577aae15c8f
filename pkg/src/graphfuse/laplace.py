"""Bayesian fused-lasso (Laplace fusion) sampler on the same chain.

Each chain difference gets a normal-exponential mixture::

    theta_i - theta_j | tau_k, sigma2 ~ N(0, tau_k * sigma2)
    tau_k ~ Exponential(rate = laplace_rate**2 / 2)

so that marginally ``theta_i - theta_j`` is Laplace with scale
``sigma / laplace_rate``. The root prior, sigma2 prior and theta sweep are
shared with :mod:`graphfuse.tfusion`.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .distributions import sample_inverse_gaussian
from .tfusion import (
    ChainData,
    FusionState,
    PosteriorSamples,
    SIGMA2_INIT_FLOOR,
    _check_counts,
    chain_differences,
    gibbs_loop,
    make_rng,
)

# Inverse-Gaussian mean used when a difference is numerically zero.
IG_MEAN_CAP = 1e10
_DIFF_EPS = 1e-10


def init_laplace_state(data: ChainData) -> FusionState:
    y = data.y
    s2 = float(np.var(y, ddof=1)) if y.shape[0] > 1 else 0.0
    rate = data.hyper.laplace_rate
    tau = np.full(max(data.n - 1, 0), 2.0 / (rate * rate))  # prior mean
    return FusionState(theta=y.copy(), lam=tau, sigma2=max(s2, SIGMA2_INIT_FLOOR))


def update_taus(state: FusionState, data: ChainData, rng: np.random.Generator) -> FusionState:
    rate = data.hyper.laplace_rate
    d = np.abs(chain_differences(state.theta, data))
    mean = np.full(d.shape, IG_MEAN_CAP)
    big = d >= _DIFF_EPS
    mean[big] = np.minimum(rate * np.sqrt(state.sigma2) / d[big], IG_MEAN_CAP)
    inv_tau = sample_inverse_gaussian(mean, rate * rate, rng, size=d.shape)
    return replace(state, lam=1.0 / inv_tau)


def run_laplace_gibbs(
    data: ChainData,
    iterations: int = 6000,
    burn_in: int = 1000,
    thin: int = 1,
    seed=0,
) -> PosteriorSamples:
    _check_counts(iterations, burn_in, thin)
    rng = make_rng(seed)
    meta = {"method": "laplace", "seed": seed if not isinstance(seed, np.random.Generator) else None}
    return gibbs_loop(data, init_laplace_state(data), update_taus, iterations, burn_in, thin, rng, meta)
