"""Exact 1-D fused lasso (total-variation denoising) along a DFS chain."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .graph import ChainOrder


@dataclass(frozen=True)
class TvSolution:
    theta_hat: np.ndarray   # original node order
    lambda_used: float
    objective: float


@numba.njit(cache=True)
def _tv1d(y, lam):
    # Condat's direct algorithm: exact minimiser of
    # 0.5 * ||y - x||^2 + lam * sum |x[k+1] - x[k]| in one forward pass.
    n = y.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    k = 0
    k0 = 0
    kplus = 0
    kminus = 0
    umin = lam
    umax = -lam
    vmin = y[0] - lam
    vmax = y[0] + lam
    twolam = 2.0 * lam
    minlam = -lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = k0
                kminus = k0
                vmin = y[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k0
                vmax = y[k0]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > k:
                        break
                return out
        umin += y[k + 1] - vmin
        if umin < minlam:
            while True:
                out[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = k0
            kminus = k0
            kplus = k0
            vmin = y[k0]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
        else:
            umax += y[k + 1] - vmax
            if umax > lam:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k0
                kminus = k0
                vmax = y[k0]
                vmin = vmax - twolam
                umin = lam
                umax = minlam
            else:
                k += 1
                if umin >= lam:
                    kminus = k
                    vmin += (umin - lam) / (k - k0 + 1)
                    umin = lam
                if umax <= minlam:
                    kplus = k
                    vmax += (umax + lam) / (k - k0 + 1)
                    umax = minlam


def tv1d(y, lam: float) -> np.ndarray:
    """Fused-lasso fit of a sequence ``y`` with penalty ``lam``."""
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be a vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if not (np.isfinite(lam) and lam >= 0):
        raise ValueError("lambda must be finite and >= 0")
    if lam == 0 or y.shape[0] < 2:
        return y.copy()
    return _tv1d(y, float(lam))


def chain_objective(y, theta, lam: float) -> float:
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r = y - theta
    return float(0.5 * r @ r + lam * np.abs(np.diff(theta)).sum())


def kkt_violation(y, x, lam: float, jump_tol: float = 1e-9) -> float:
    """Largest violation of the fused-lasso optimality conditions for sequence fit ``x``.

    With c_t the running sum of residuals y - x, optimality needs c_{n} = 0,
    |c_t| <= lam everywhere, and c_t = -lam * sign(x[t+1] - x[t]) at jumps.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    c = np.cumsum(y - x)
    worst = abs(c[-1])
    if x.shape[0] > 1:
        inner = c[:-1]
        worst = max(worst, float(np.max(np.abs(inner)) - lam))
        dx = np.diff(x)
        jumps = np.abs(dx) > jump_tol
        if np.any(jumps):
            worst = max(worst, float(np.max(np.abs(inner[jumps] + lam * np.sign(dx[jumps])))))
    return max(worst, 0.0)


def tv_denoise_chain(y, chain: ChainOrder, lam: float) -> TvSolution:
    y = np.asarray(y, dtype=float)
    if y.shape[0] != chain.n:
        raise ValueError("signal length does not match the chain")
    order = chain.order_array()
    xc = tv1d(y[order], lam)
    theta = np.empty_like(xc)
    theta[order] = xc
    return TvSolution(theta_hat=theta, lambda_used=float(lam), objective=chain_objective(y[order], xc, lam))


def default_lambda_grid(y, size: int = 30) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    upper = max(y.shape[0] * float(np.ptp(y)), 1e-2)
    return np.geomspace(1e-3, upper, size)


def _cv_error(yc: np.ndarray, fold_of: np.ndarray, folds: int, lam: float) -> float:
    n = yc.shape[0]
    pos = np.arange(n)
    sq = 0.0
    for f in range(folds):
        held = fold_of == f
        train = pos[~held]
        fit = tv1d(yc[train], lam)
        test = pos[held]
        # nearest training slots on either side of each held-out slot
        right = np.searchsorted(train, test)
        left = right - 1
        has_l = left >= 0
        has_r = right < train.shape[0]
        pred = np.zeros(test.shape[0])
        cnt = np.zeros(test.shape[0])
        pred[has_l] += fit[left[has_l]]
        cnt[has_l] += 1
        pred[has_r] += fit[right[has_r]]
        cnt[has_r] += 1
        pred /= cnt
        sq += float(np.sum((yc[test] - pred) ** 2))
    return sq / n


def choose_lambda_cv(y, chain, grid=None, folds: int = 5, seed=0, return_errors: bool = False):
    """K-fold CV over chain slots; held-out slots are predicted from their chain neighbours.

    ``chain`` may be a single ChainOrder or a sequence of them, in which case
    the CV errors are summed so that one penalty serves every chain. Returns
    the grid value with the smallest mean squared prediction error,
    preferring the smallest penalty on ties.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    chains = [chain] if isinstance(chain, ChainOrder) else list(chain)
    if not chains:
        raise ValueError("need at least one chain")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < folds + 1:
        raise ValueError("too few nodes for the requested number of folds")
    grid = default_lambda_grid(y) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    grid = np.sort(grid)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[rng.permutation(n)] = np.arange(n) % folds
    errors = np.zeros(grid.size)
    for ch in chains:
        if ch.n != n:
            raise ValueError("signal length does not match the chain")
        yc = y[ch.order_array()]
        errors += np.array([_cv_error(yc, fold_of, folds, lam) for lam in grid])
    errors /= len(chains)
    best = float(grid[int(np.argmin(errors))])
    if return_errors:
        return best, grid, errors
    return best
