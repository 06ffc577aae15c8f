"""End-to-end acceptance gate: one check per criterion, each printing a PASS/FAIL line."""

import contextlib
import os
import subprocess
import sys
import time

import numpy as np
from scipy import stats

from oracles import batch_means_se, fixed_scale_gaussian, successive_conditional, theta_sweeps
from graphfuse.distributions import Hyperparams, default_hyperparams
from graphfuse.experiments import TableCell, gen_chain_signal, run_table
from graphfuse.graph import chain_from_order, dfs_chain, new_graph, total_variation
from graphfuse.io import write_signal
from graphfuse.posterior import change_points, sparsify, summarize
from graphfuse.tfusion import FusionState, make_chain_data, run_gibbs, update_lambdas, update_sigma2
from graphfuse.tv import kkt_violation, tv1d

SEED = 20240


@contextlib.contextmanager
def criterion(num, title, capsys):
    start = time.perf_counter()
    notes = []
    try:
        yield notes
    except BaseException:
        status = "FAIL"
        raise
    else:
        status = "PASS"
    finally:
        detail = f" [{'; '.join(notes)}]" if notes else ""
        with capsys.disabled():
            print(f"\nACCEPTANCE {num:>2} {status}: {title} ({time.perf_counter() - start:.1f}s){detail}")


def _check(notes, label, ok):
    notes.append(f"{label}: {'ok' if ok else 'MISS'}")
    return ok


# 1 -----------------------------------------------------------------------------

def test_01_fixed_scale_oracle(capsys):
    with criterion(1, "theta sweep matches the closed-form Gaussian on n=4", capsys) as notes:
        t0 = time.perf_counter()
        y = np.array([0.7, -1.2, 0.4, 2.5])
        order = [2, 0, 3, 1]
        lam = np.array([0.3, 2.0, 0.08])
        sigma2, lambda0 = 0.8, 5.0
        draws = theta_sweeps(y, order, lam, sigma2, lambda0, 200_000, seed=SEED)
        elapsed = time.perf_counter() - t0
        mean, cov = fixed_scale_gaussian(y, order, lam, sigma2, lambda0)
        worst = 0.0
        for i in range(4):
            worst = max(worst, abs(draws[:, i].mean() - mean[i]) / batch_means_se(draws[:, i]))
            for j in range(i, 4):
                p = (draws[:, i] - mean[i]) * (draws[:, j] - mean[j])
                worst = max(worst, abs(p.mean() - cov[i, j]) / batch_means_se(p))
        notes.append(f"max |z| {worst:.2f}, {elapsed:.1f}s")
        assert worst < 4.0
        assert elapsed < 30.0


# 2 -----------------------------------------------------------------------------

def test_02_conditional_laws(capsys):
    with criterion(2, "scale and variance conditionals are inverse-gamma", capsys) as notes:
        n = 100_001
        hyper = default_hyperparams(100)
        theta = 0.05 * np.sin(np.arange(n) / 7.0)
        state = FusionState(theta=theta, lam=np.ones(n - 1), sigma2=0.4)
        data = make_chain_data(np.cos(np.arange(n) / 11.0), chain_from_order(range(n)), hyper)
        rng = np.random.default_rng(SEED)
        lam = update_lambdas(state, data, rng).lam
        d = np.diff(theta)
        u = stats.invgamma.cdf(lam, hyper.a_t + 0.5, scale=hyper.b_t + d * d / (2 * state.sigma2))
        p_lam = stats.kstest(u, "uniform").pvalue

        small = FusionState(theta=np.array([0.3, 0.1, -0.4, 0.2, 1.0]), lam=np.array([0.5, 0.02, 1.5, 0.2]), sigma2=1.0)
        sdata = make_chain_data([0.5, 0.0, -0.2, 0.4, 0.8], chain_from_order([1, 0, 2, 4, 3]), hyper)
        s2 = np.array([update_sigma2(small, sdata, rng).sigma2 for _ in range(100_000)])
        tc = small.theta[[1, 0, 2, 4, 3]]
        rate = (hyper.b_sigma + small.theta[1] ** 2 / (2 * hyper.lambda0)
                + 0.5 * np.sum((sdata.y - small.theta) ** 2) + 0.5 * np.sum(np.diff(tc) ** 2 / small.lam))
        p_s2 = stats.kstest(s2, stats.invgamma(hyper.a_sigma + 5, scale=rate).cdf).pvalue
        notes.append(f"KS p lambda {p_lam:.3g}, sigma2 {p_s2:.3g}")
        assert p_lam > 1e-3 and p_s2 > 1e-3


# 3 -----------------------------------------------------------------------------

def test_03_geweke(capsys):
    with criterion(3, "successive-conditional moments match the prior (n=5)", capsys) as notes:
        hyper = Hyperparams(a_t=3.0, b_t=2.0, a_sigma=6.0, b_sigma=5.0, lambda0=2.0)
        order = [3, 1, 0, 4, 2]

        def scale_draw(rng, k):
            return hyper.b_t / rng.standard_gamma(hyper.a_t, size=k)

        s2, th = successive_conditional(hyper, order, 50_000, update_lambdas, scale_draw, seed=SEED)
        # independent marginal-conditional draws from the prior
        rng = np.random.default_rng(SEED + 1)
        m = 50_000
        p_s2 = hyper.b_sigma / rng.standard_gamma(hyper.a_sigma, size=m)
        p_root = rng.normal(0.0, np.sqrt(hyper.lambda0 * p_s2))
        root = th[:, order[0]]
        zs = []
        for sc, pr in ((s2, p_s2), (root, p_root), (root**2, p_root**2)):
            se = np.hypot(batch_means_se(sc), pr.std(ddof=1) / np.sqrt(m))
            zs.append(abs(sc.mean() - pr.mean()) / se)
        notes.append("|z| " + ", ".join(f"{z:.2f}" for z in zs))
        assert max(zs) < 4.0


# 4 -----------------------------------------------------------------------------

def test_04_chain_table(capsys):
    with criterion(4, "even-chain ordering: t << laplace at 0.1, l1 < laplace at 0.5", capsys) as notes:
        t0 = time.perf_counter()
        cells = [TableCell("chain", "even", 0.1), TableCell("chain", "even", 0.5)]
        res = {(r.sigma, r.method): r.mse_mean for r in run_table(cells, reps=30, seed=SEED)}
        elapsed = time.perf_counter() - t0
        notes.append(f"0.1: t {res[0.1, 't']:.4f} laplace {res[0.1, 'laplace']:.4f}; "
                     f"0.5: l1 {res[0.5, 'l1']:.4f} laplace {res[0.5, 'laplace']:.4f}")
        ok = [
            _check(notes, "t<0.02", res[0.1, "t"] < 0.02),
            _check(notes, "laplace>5t", res[0.1, "laplace"] > 5 * res[0.1, "t"]),
            _check(notes, "l1<laplace", res[0.5, "l1"] < res[0.5, "laplace"]),
            _check(notes, f"{elapsed:.0f}s<600s", elapsed < 600),
        ]
        assert all(ok)


# 5 -----------------------------------------------------------------------------

def test_05_lattice(capsys):
    with criterion(5, "lattice kappa=10 adjusted MSE: t < 0.01 < 0.05 < laplace", capsys) as notes:
        t0 = time.perf_counter()
        res = {r.method: r.adj_mse_mean
               for r in run_table([TableCell("lattice", 10.0, 0.3, 256)], ("t", "laplace"), reps=20, seed=SEED)}
        elapsed = time.perf_counter() - t0
        notes.append(f"t {res['t']:.4f}, laplace {res['laplace']:.4f}")
        ok = [
            _check(notes, "t<0.01", res["t"] < 0.01),
            _check(notes, "laplace>0.05", res["laplace"] > 0.05),
            _check(notes, f"{elapsed:.0f}s<600s", elapsed < 600),
        ]
        assert all(ok)


# 6 -----------------------------------------------------------------------------

def test_06_trees(capsys):
    with criterion(6, "linked trees: t < 0.01, laplace > 0.03, l1 < 0.01", capsys) as notes:
        t0 = time.perf_counter()
        res = {r.method: r.mse_mean for r in run_table([TableCell("tree", 0, 0.3, 200)], reps=20, seed=SEED)}
        elapsed = time.perf_counter() - t0
        notes.append(f"t {res['t']:.4f}, laplace {res['laplace']:.4f}, l1 {res['l1']:.4f}")
        ok = [
            _check(notes, "t<0.01", res["t"] < 0.01),
            _check(notes, "laplace>0.03", res["laplace"] > 0.03),
            _check(notes, "l1<0.01", res["l1"] < 0.01),
            _check(notes, f"{elapsed:.0f}s<600s", elapsed < 600),
        ]
        assert all(ok)


# 7 -----------------------------------------------------------------------------

def _random_connected(rng, n):
    edges = {(int(rng.integers(k)), k) for k in range(1, n)}
    for _ in range(int(rng.integers(0, 2 * n))):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((min(u, v), max(u, v)))
    perm = rng.permutation(n)
    return new_graph(n, [(int(perm[u]), int(perm[v])) for u, v in edges])


def test_07_tv_doubling(capsys):
    with criterion(7, "TV over the DFS chain is at most twice TV over the graph", capsys) as notes:
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 51))
            g = _random_connected(rng, n)
            # integer signals keep both sides exact in floating point
            theta = rng.integers(-5, 6, size=n).astype(float)
            chain = dfs_chain(g, int(rng.integers(n)))
            tv_c = total_variation(theta, chain.chain_edges)
            tv_g = total_variation(theta, g.edges)
            assert tv_c <= 2 * tv_g
            if tv_g > 0:
                worst = max(worst, tv_c / tv_g)
        notes.append(f"max ratio {worst:.3f}")


# 8 -----------------------------------------------------------------------------

def test_08_fused_lasso_exact(capsys):
    with criterion(8, "fused lasso passes KKT; lambda limits exact", capsys) as notes:
        rng = np.random.default_rng(SEED)
        worst_kkt = worst_lim = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 201))
            y = rng.normal(size=n) * rng.choice([0.1, 1.0, 5.0]) + np.repeat(rng.normal(size=5) * 3, -(-n // 5))[:n]
            lam = float(10 ** rng.uniform(-3, 1.5))
            worst_kkt = max(worst_kkt, kkt_violation(y, tv1d(y, lam), lam))
            assert np.array_equal(tv1d(y, 0.0), y)
            big = n * max(np.ptp(y), 1e-12)
            worst_lim = max(worst_lim, float(np.max(np.abs(tv1d(y, big) - y.mean()))))
        notes.append(f"max KKT {worst_kkt:.1e}, max limit error {worst_lim:.1e}")
        assert worst_kkt < 1e-6
        assert worst_lim < 1e-10


# 9 -----------------------------------------------------------------------------

def test_09_sparsify(capsys):
    with criterion(9, "sparsify finds the 9 true breaks on clean data and none on constant data", capsys) as notes:
        spec = gen_chain_signal("even")
        chain = chain_from_order(range(100))
        hyper = default_hyperparams(100)
        truth_breaks = list(np.flatnonzero(np.diff(spec.theta0)))
        s = summarize(run_gibbs(make_chain_data(spec.theta0, chain, hyper), seed=SEED))
        cps = change_points(sparsify(s, hyper, 100, chain), chain)
        flat = summarize(run_gibbs(make_chain_data(np.full(100, 2.5), chain, hyper), seed=SEED))
        cps_flat = change_points(sparsify(flat, hyper, 100, chain), chain)
        notes.append(f"{len(cps)} breaks on clean data, {len(cps_flat)} on constant data")
        assert cps == truth_breaks
        assert cps_flat == []


# 10 ----------------------------------------------------------------------------

def test_10_contraction(capsys):
    with criterion(10, "t-fusion MSE shrinks from n=100 to n=400 (sigma=0.3)", capsys) as notes:
        t0 = time.perf_counter()
        cells = [TableCell("chain", "even", 0.3, 100), TableCell("chain", "even", 0.3, 400)]
        small, large = (r.mse_mean for r in run_table(cells, ("t",), reps=20, seed=SEED))
        elapsed = time.perf_counter() - t0
        notes.append(f"n=100 {small:.4f}, n=400 {large:.4f}, {elapsed:.0f}s")
        assert large < small
        assert elapsed < 300


# 11 ----------------------------------------------------------------------------

def _run_cli(args, out, threads):
    env = dict(os.environ, GRAPHFUSE_THREADS=str(threads))
    r = subprocess.run([sys.executable, "-m", "graphfuse", *args, "--out", str(out)],
                       env=env, capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_11_cli_determinism(tmp_path, capsys):
    with criterion(11, "CLI outputs are byte-identical across reruns and thread counts", capsys) as notes:
        spec = gen_chain_signal("even")
        y = spec.theta0 + 0.2 * np.random.default_rng(SEED).standard_normal(100)
        write_signal(y, tmp_path / "y.txt")
        lat = np.zeros(36)
        lat[14:16] = 3.0
        lat += 0.2 * np.random.default_rng(SEED + 1).standard_normal(36)
        write_signal(lat, tmp_path / "lat.txt")
        rows = [f"2021-{1 + i // 28:02d}-{1 + i % 28:02d},{100 + (i > 30) * 20 + i % 3}" for i in range(60)]
        (tmp_path / "px.csv").write_text("Date,Adj Close\n" + "\n".join(rows) + "\n")
        fast = ["--iters", "300", "--burnin", "50", "--seed", "11"]
        commands = {
            "denoise-t": ["denoise", "--signal", str(tmp_path / "y.txt"), *fast],
            "denoise-laplace-lattice": ["denoise", "--signal", str(tmp_path / "lat.txt"), "--gen", "lattice:6x6",
                                        "--method", "laplace", *fast],
            "denoise-l1": ["denoise", "--signal", str(tmp_path / "lat.txt"), "--gen", "lattice:6x6",
                           "--method", "l1", "--format", "csv", *fast],
            "changepoints": ["changepoints", "--stock", str(tmp_path / "px.csv"), *fast],
            "simulate": ["simulate", "--design", "trees:1", "--sigma", "0.3", "--reps", "3", "--write-data", *fast],
            "table": ["table", "lattice", "--reps", "2", *fast],
        }
        for name, argv in commands.items():
            a = _run_cli(argv, tmp_path / f"{name}-a", 1)
            b = _run_cli(argv, tmp_path / f"{name}-b", 1)
            c = _run_cli(argv, tmp_path / f"{name}-c", 3)
            assert a and a == b == c, name
        notes.append(f"{len(commands)} commands x 3 runs")
