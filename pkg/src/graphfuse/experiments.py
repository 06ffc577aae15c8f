"""Simulation designs, error metrics and the Monte-Carlo table harness."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import CROSS_VALIDATE, Hyperparams, default_hyperparams
from .graph import Graph, chain_from_order, dfs_chain, gen_chain, gen_lattice, gen_linked_trees
from .posterior import SamplerConfig, derive_seed, run_chain
from .tv import choose_lambda_cv, tv_denoise_chain

CHAIN_LEVELS = (1.0, 3.0, 0.0, 2.0, 4.0, 1.0, 3.0, 0.0, 2.0, 4.0)
CHAIN_LAYOUTS = {
    "even": (10,) * 10,
    "uneven": (15, 5) * 5,
    "very_uneven": (18, 2) * 5,
}
TREE_LEVELS = (1.0, -1.0, 4.0, -4.0)
METHODS = ("t", "laplace", "l1")


@dataclass(frozen=True)
class SignalSpec:
    graph: Graph
    theta0: np.ndarray
    label: str
    sigma: float | None = None
    native_chain: bool = False   # True when the graph is a path in node order
    s: int = field(init=False)

    def __post_init__(self):
        theta0 = np.asarray(self.theta0, dtype=float)
        if theta0.shape != (self.graph.n,):
            raise ValueError("theta0 length must equal the node count")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "s", edge_sparsity(theta0, self.graph))

    def with_sigma(self, sigma: float) -> "SignalSpec":
        return SignalSpec(self.graph, self.theta0, self.label, sigma, self.native_chain)


def edge_sparsity(theta, graph: Graph) -> int:
    e = graph.edge_array()
    if e.size == 0:
        return 0
    theta = np.asarray(theta)
    return int(np.count_nonzero(theta[e[:, 0]] != theta[e[:, 1]]))


def _scaled_lengths(base: tuple[int, ...], n: int) -> list[int]:
    total = sum(base)
    if n % total:
        raise ValueError(f"n must be a multiple of {total} for this layout")
    return [b * (n // total) for b in base]


def gen_chain_signal(kind: str, n: int = 100) -> SignalSpec:
    """Ten constant pieces on a path; lengths scale with n, levels cycle 1,3,0,2,4."""
    if kind not in CHAIN_LAYOUTS:
        raise ValueError(f"unknown chain design {kind!r}")
    lengths = _scaled_lengths(CHAIN_LAYOUTS[kind], n)
    theta = np.repeat(CHAIN_LEVELS, lengths)
    return SignalSpec(gen_chain(n), theta, label=f"chain-{kind}", native_chain=True)


def gen_lattice_signal(kappa: float, rows: int = 16, cols: int = 16, radius: float = 4.0,
                       metric: str = "euclidean") -> SignalSpec:
    r, c = np.divmod(np.arange(rows * cols), cols)
    dr = r - (rows - 1) / 2.0
    dc = c - (cols - 1) / 2.0
    if metric == "euclidean":
        dist = np.hypot(dr, dc)
    elif metric == "manhattan":
        dist = np.abs(dr) + np.abs(dc)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    theta = np.where(dist <= radius, float(kappa), 0.0)
    return SignalSpec(gen_lattice(rows, cols), theta, label=f"lattice-k{kappa:g}")


def gen_tree_signal(seed=0) -> SignalSpec:
    g = gen_linked_trees(4, 50, 3, seed)
    theta = np.repeat(TREE_LEVELS, 50)
    return SignalSpec(g, theta, label="trees")


def add_noise(spec: SignalSpec, sigma: float, seed) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    rng = np.random.default_rng(seed)
    return spec.theta0 + sigma * rng.standard_normal(spec.theta0.shape[0])


def mse(theta_hat, theta0) -> float:
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if theta_hat.shape != theta0.shape:
        raise ValueError("length mismatch")
    d = theta_hat - theta0
    return float(d @ d / d.shape[0])


def adj_mse(theta_hat, theta0) -> float:
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if theta_hat.shape != theta0.shape:
        raise ValueError("length mismatch")
    norm2 = float(theta0 @ theta0)
    if norm2 == 0:
        raise ValueError("adjusted MSE undefined for an all-zero truth")
    d = theta_hat - theta0
    return float(d @ d / norm2)


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values for a standard error")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


# -- fitting ------------------------------------------------------------------

def pick_roots(n: int, k: int, seed) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(r) for r in rng.choice(n, size=min(k, n), replace=False)]


def fit_estimate(method: str, y, spec: SignalSpec, roots, config: SamplerConfig,
                 hyper: Hyperparams, seed, tv_lambda=CROSS_VALIDATE) -> np.ndarray:
    """Point estimate of theta: pooled posterior mean, or the average fused-lasso fit over roots.

    The fused-lasso penalty is shared by all roots and cross-validated jointly.
    """
    y = np.asarray(y, dtype=float)
    if spec.native_chain:
        chains = [chain_from_order(range(spec.graph.n))]
    else:
        chains = [dfs_chain(spec.graph, r) for r in roots]
    if method in ("t", "laplace"):
        cfg = SamplerConfig(method, config.iterations, config.burn_in, config.thin)
        draws = [run_chain(y, ch, cfg, hyper, derive_seed(seed, i)).draws for i, ch in enumerate(chains)]
        return np.vstack(draws).mean(axis=0)
    if method == "l1":
        lam = tv_lambda
        if lam == CROSS_VALIDATE:
            lam = choose_lambda_cv(y, chains, seed=seed)
        return np.mean([tv_denoise_chain(y, ch, float(lam)).theta_hat for ch in chains], axis=0)
    raise ValueError(f"unknown method {method!r}")


# -- tables -------------------------------------------------------------------

@dataclass(frozen=True)
class TableCell:
    design: str             # "chain" | "lattice" | "tree"
    param: str | float      # chain layout, lattice kappa, or tree graph seed
    sigma: float
    n: int = 100

    @property
    def label(self) -> str:
        if self.design == "chain":
            return f"chain-{self.param}" + ("" if self.n == 100 else f"-n{self.n}")
        if self.design == "lattice":
            return f"lattice-k{float(self.param):g}"
        return "trees"

    def signal(self) -> SignalSpec:
        if self.design == "chain":
            spec = gen_chain_signal(str(self.param), self.n)
        elif self.design == "lattice":
            spec = gen_lattice_signal(float(self.param))
        elif self.design == "tree":
            spec = gen_tree_signal(int(self.param))
        else:
            raise ValueError(f"unknown design {self.design!r}")
        return spec.with_sigma(self.sigma)


def chain_cells(n: int = 100, sigmas=(0.1, 0.3, 0.5)) -> list[TableCell]:
    return [TableCell("chain", kind, s, n) for kind in CHAIN_LAYOUTS for s in sigmas]


def lattice_cells(kappas=(1.0, 5.0, 10.0), sigma: float = 0.3) -> list[TableCell]:
    return [TableCell("lattice", float(k), sigma, 256) for k in kappas]


def tree_cells(graph_seed: int = 0, sigma: float = 0.3) -> list[TableCell]:
    return [TableCell("tree", graph_seed, sigma, 200)]


TABLES = {"chain": chain_cells, "lattice": lattice_cells, "tree": tree_cells}


@dataclass(frozen=True)
class ExperimentResult:
    cell: str
    sigma: float
    method: str
    reps: int
    mse_mean: float
    mse_se: float
    adj_mse_mean: float
    adj_mse_se: float
    seed: int


def _replicate(task):
    cell, cell_idx, rep, methods, config, seed, num_roots, hyper_overrides = task
    spec = cell.signal()
    n = spec.graph.n
    y = add_noise(spec, spec.sigma, derive_seed(seed, cell_idx, rep, 0))
    roots = [] if spec.native_chain else pick_roots(n, num_roots, derive_seed(seed, cell_idx, rep, 1))
    hyper = default_hyperparams(n).updated(**hyper_overrides)
    out = []
    for mi, method in enumerate(methods):
        est = fit_estimate(method, y, spec, roots, config, hyper, derive_seed(seed, cell_idx, rep, 2 + mi))
        out.append((mse(est, spec.theta0), adj_mse(est, spec.theta0)))
    return out


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("GRAPHFUSE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_table(cells, methods=METHODS, reps: int = 100, seed: int = 0,
              config: SamplerConfig = SamplerConfig(), num_roots: int = 3,
              workers: int | None = None, hyper_overrides: dict | None = None) -> list[ExperimentResult]:
    """Replicate (noise, fit, score) for every cell and method.

    Seeds are derived from (seed, cell index, replication), so results do not
    depend on the number of workers.
    """
    if reps < 2:
        raise ValueError("need reps >= 2")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    overrides = dict(hyper_overrides or {})
    tasks = [
        (cell, ci, rep, tuple(methods), config, seed, num_roots, overrides)
        for ci, cell in enumerate(cells)
        for rep in range(reps)
    ]
    nworkers = min(worker_count(workers), len(tasks))
    if nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            scores = list(pool.map(_replicate, tasks, chunksize=1))
    else:
        scores = [_replicate(t) for t in tasks]

    results = []
    for ci, cell in enumerate(cells):
        block = scores[ci * reps:(ci + 1) * reps]
        for mi, method in enumerate(methods):
            m_mean, m_se = mean_se([s[mi][0] for s in block])
            a_mean, a_se = mean_se([s[mi][1] for s in block])
            results.append(ExperimentResult(cell.label, cell.sigma, method, reps, m_mean, m_se, a_mean, a_se, seed))
    return results
