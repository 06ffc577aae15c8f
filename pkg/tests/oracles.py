"""Independent reference computations used by several test modules."""

import numpy as np

from graphfuse.distributions import Hyperparams
from graphfuse.graph import chain_from_order
from graphfuse.tfusion import ChainData, FusionState, update_sigma2, update_thetas


def batch_means_se(x, batches=50):
    """Standard error of the mean of an autocorrelated series."""
    x = np.asarray(x, dtype=float)
    m = len(x) // batches
    means = x[: m * batches].reshape(batches, m).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(batches)


def fixed_scale_gaussian(y, order, lam, sigma2, lambda0):
    """Mean and covariance of theta | y, lambda, sigma2 built entry by entry."""
    n = len(y)
    P = np.eye(n)
    r = order[0]
    P[r, r] += 1.0 / lambda0
    for k in range(n - 1):
        i, j = order[k], order[k + 1]
        w = 1.0 / lam[k]
        P[i, i] += w
        P[j, j] += w
        P[i, j] -= w
        P[j, i] -= w
    P /= sigma2
    cov = np.linalg.inv(P)
    mean = cov @ (np.asarray(y) / sigma2)
    return mean, cov


def theta_sweeps(y, order, lam, sigma2, lambda0, draws, seed=0):
    """Run only the theta sweep with scales and sigma2 held fixed."""
    hyper = Hyperparams(a_t=2.0, b_t=1.0, lambda0=lambda0)
    data = ChainData(y=np.asarray(y, float), chain=chain_from_order(order), hyper=hyper)
    state = FusionState(theta=np.asarray(y, float).copy(), lam=np.asarray(lam, float), sigma2=sigma2)
    rng = np.random.default_rng(seed)
    out = np.empty((draws, len(y)))
    for s in range(draws):
        state = update_thetas(state, data, rng)
        out[s] = state.theta
    return out


def prior_draw(hyper, n, order, rng, scale_draw):
    sigma2 = hyper.b_sigma / rng.standard_gamma(hyper.a_sigma)
    lam = scale_draw(rng, n - 1)
    tc = np.empty(n)
    tc[0] = rng.normal(0.0, np.sqrt(hyper.lambda0 * sigma2))
    for k in range(n - 1):
        tc[k + 1] = tc[k] + rng.normal(0.0, np.sqrt(lam[k] * sigma2))
    theta = np.empty(n)
    theta[np.asarray(order)] = tc
    return FusionState(theta=theta, lam=lam, sigma2=sigma2)


def successive_conditional(hyper, order, cycles, update_scales, scale_draw, seed=0, fix_sigma2=None):
    """Geweke successive-conditional simulator.

    Alternates y ~ p(y | params) with one Gibbs cycle params ~ p(params | y).
    Returns per-cycle (sigma2, theta) arrays.
    """
    n = len(order)
    rng = np.random.default_rng(seed)
    chain = chain_from_order(order)
    state = prior_draw(hyper, n, order, rng, scale_draw)
    if fix_sigma2 is not None:
        state = FusionState(theta=state.theta, lam=state.lam, sigma2=fix_sigma2)
    s2 = np.empty(cycles)
    th = np.empty((cycles, n))
    for c in range(cycles):
        y = state.theta + np.sqrt(state.sigma2) * rng.standard_normal(n)
        data = ChainData(y=y, chain=chain, hyper=hyper)
        state = update_scales(state, data, rng)
        if fix_sigma2 is None:
            state = update_sigma2(state, data, rng)
        state = update_thetas(state, data, rng)
        s2[c] = state.sigma2
        th[c] = state.theta
    return s2, th
