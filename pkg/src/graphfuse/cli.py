"""Command-line entry point: ``graphfuse {denoise,simulate,table,changepoints}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io as gio
from .distributions import default_hyperparams
from .experiments import (
    METHODS,
    TABLES,
    TableCell,
    add_noise,
    adj_mse,
    mse,
    pick_roots,
    run_table,
)
from .graph import (
    GraphError,
    chain_from_order,
    dfs_chain,
    gen_chain,
    gen_lattice,
    gen_linked_trees,
    read_edge_list,
    write_edge_list,
)
from .posterior import (
    SamplerConfig,
    change_points,
    derive_seed,
    partition_from_breaks,
    pool_roots,
    run_chain,
    sparsify,
    summarize,
)
from .tv import choose_lambda_cv, tv_denoise_chain

HYPER_FLAGS = {
    "a_t": "--a-t",
    "m": "--m",
    "a_sigma": "--a-sigma",
    "b_sigma": "--b-sigma",
    "lambda0": "--lambda0",
    "laplace_rate": "--laplace-rate",
}


class CliError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------

def _add_sampler_args(p):
    p.add_argument("--iters", type=int, default=6000, help="Gibbs iterations (default 6000)")
    p.add_argument("--burnin", type=int, default=1000, help="discarded iterations (default 1000)")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, help="JSON file of hyperparameter overrides")
    for name, flag in HYPER_FLAGS.items():
        p.add_argument(flag, dest=name, type=float, default=None)


def _add_input_args(p, allow_stock=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--graph", type=Path, help="edge-list file ('n m' header, then 'u v' lines)")
    g.add_argument("--gen", help="generated graph: chain:N, lattice:RxC or trees:SEED")
    s = p.add_mutually_exclusive_group(required=True)
    s.add_argument("--signal", type=Path, help="one observation per line, node order")
    if allow_stock:
        s.add_argument("--stock", type=Path, help="price CSV with Date and Adj Close columns")
        p.add_argument("--from", dest="date_from")
        p.add_argument("--to", dest="date_to")
        p.add_argument("--date-column")
        p.add_argument("--price-column")
        p.add_argument("--log-returns", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="fit one signal on one graph")
    _add_input_args(p)
    p.add_argument("--method", choices=METHODS, default="t")
    p.add_argument("--roots", type=int, default=3, help="number of random DFS roots (non-path graphs)")
    p.add_argument("--root-list", help="comma-separated explicit DFS roots")
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="tv_lambda", type=float, help="fused-lasso penalty (l1)")
    lam.add_argument("--cv", action="store_true", help="cross-validate the fused-lasso penalty (default)")
    p.add_argument("--truth", type=Path, help="true signal; adds MSE to the summary")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_sampler_args(p)

    p = sub.add_parser("changepoints", help="t-fusion change points of a time series")
    _add_input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_sampler_args(p)

    p = sub.add_parser("simulate", help="Monte-Carlo runs for one design")
    p.add_argument("--design", required=True, help="chain:even|uneven|very_uneven, lattice:KAPPA or trees:SEED")
    p.add_argument("--sigma", type=float, action="append", help="noise sd (repeatable)")
    p.add_argument("--n", type=int, default=100, help="chain length")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--methods", default="t,laplace,l1")
    p.add_argument("--write-data", action="store_true",
                   help="also write one noisy realisation (graph.txt, signal.txt, truth.txt)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    _add_sampler_args(p)

    p = sub.add_parser("table", help="regenerate a full simulation table")
    p.add_argument("name", choices=sorted(TABLES))
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--methods", default="t,laplace,l1")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    _add_sampler_args(p)
    return parser


# -- helpers ------------------------------------------------------------------

def _hyper(args, n):
    overrides = {}
    if args.config is not None:
        cfg = json.loads(args.config.read_text())
        unknown = set(cfg) - set(HYPER_FLAGS)
        if unknown:
            raise CliError(f"unknown hyperparameter(s) in config: {', '.join(sorted(unknown))}")
        overrides.update(cfg)
    for name in HYPER_FLAGS:
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    return default_hyperparams(n).updated(**overrides), overrides


def _sampler_config(args, method="t"):
    return SamplerConfig(method=method, iterations=args.iters, burn_in=args.burnin, thin=args.thin)


def _graph_from_spec(spec: str):
    kind, _, arg = spec.partition(":")
    try:
        if kind == "chain":
            return gen_chain(int(arg)), True
        if kind == "lattice":
            r, _, c = arg.lower().partition("x")
            return gen_lattice(int(r), int(c or r)), False
        if kind == "trees":
            return gen_linked_trees(4, 50, 3, int(arg or 0)), False
    except ValueError:
        pass
    raise CliError(f"bad --gen value {spec!r}")


def _load_inputs(args):
    """Return (y, graph, native_chain, dates)."""
    dates = None
    if getattr(args, "stock", None) is not None:
        series = gio.ingest_stock_csv(args.stock, args.date_from, args.date_to, args.date_column,
                                      args.price_column, args.log_returns)
        if series.skipped:
            print(f"graphfuse: skipped {series.skipped} unparseable rows", file=sys.stderr)
        return series.y, series.graph, True, series.dates
    y = gio.read_signal(args.signal)
    if args.graph is not None:
        graph, native = read_edge_list(args.graph), False
    elif args.gen is not None:
        graph, native = _graph_from_spec(args.gen)
    else:
        graph, native = gen_chain(y.shape[0]), True
    if graph.n != y.shape[0]:
        raise CliError(f"signal has {y.shape[0]} values but the graph has {graph.n} nodes")
    return y, graph, native, dates


def _chains(graph, native, args):
    if native:
        return [chain_from_order(range(graph.n))]
    if getattr(args, "root_list", None):
        roots = [int(r) for r in args.root_list.split(",")]
    else:
        roots = pick_roots(graph.n, args.roots, derive_seed(args.seed, 1))
    return [dfs_chain(graph, r) for r in roots]


def _write_summary(out: Path, fmt: str, payload: dict):
    if fmt == "json":
        gio.dump_json(payload, out / "summary.json")
        return
    n = len(payload["estimate"])
    cols = [k for k in ("estimate", "band_lo", "band_hi", "blocks") if k in payload]
    lines = ["node," + ",".join(cols)]
    for i in range(n):
        lines.append(",".join([str(i)] + [repr(payload[c][i]) for c in cols]))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    meta = {k: v for k, v in payload.items() if k not in cols and k not in ("theta_mean",)}
    gio.dump_json(meta, out / "summary_meta.json")


def _index_labels(dates, n):
    return [d.isoformat() for d in dates] if dates is not None else list(range(n))


# -- commands -----------------------------------------------------------------

def cmd_denoise(args) -> int:
    y, graph, native, dates = _load_inputs(args)
    n = graph.n
    hyper, overrides = _hyper(args, n)
    chains = _chains(graph, native, args)
    args.out.mkdir(parents=True, exist_ok=True)
    labels = _index_labels(dates, n)

    if args.method == "l1":
        lam = args.tv_lambda
        if lam is None:
            lam = choose_lambda_cv(y, chains, seed=derive_seed(args.seed, 2))
        est = np.mean([tv_denoise_chain(y, ch, lam).theta_hat for ch in chains], axis=0)
        ec = est[chains[0].order_array()]
        part = partition_from_breaks(np.abs(np.diff(ec)) > 1e-9, chains[0], 0.0)
        cps = change_points(part, chains[0])
        payload = {
            "method": "l1",
            "estimate": [float(v) for v in est],
            "lambda": float(lam),
            "blocks": [int(v) for v in part.labels],
            "change_points": [labels[c] for c in cps],
            "roots": [ch.root for ch in chains],
        }
        lo = hi = None
    else:
        config = _sampler_config(args, args.method)
        roots = [ch.root for ch in chains]
        if native:
            samples = run_chain(y, chains[0], config, hyper, derive_seed(args.seed, 0))
        else:
            samples = pool_roots(y, graph, roots, config, hyper, args.seed)
        summary = summarize(samples, args.level)
        part = sparsify(summary, hyper, n, chains[0])
        cps = change_points(part, chains[0])
        payload = gio.summary_to_dict(
            summary, part, [labels[c] for c in cps],
            method=args.method, roots=roots, seed=args.seed,
            hyperparams={"a_t": hyper.a_t, "b_t": hyper.b_t, "m": hyper.m, "a_sigma": hyper.a_sigma,
                         "b_sigma": hyper.b_sigma, "lambda0": hyper.lambda0, "laplace_rate": hyper.laplace_rate},
        )
        payload["estimate"] = payload["theta_mean"]
        est, lo, hi = summary.theta_mean, summary.band_lo, summary.band_hi

    if args.truth is not None:
        truth = gio.read_signal(args.truth)
        if truth.shape[0] != n:
            raise CliError("truth length does not match the signal")
        payload["mse"] = mse(est, truth)
        if np.any(truth != 0):
            payload["adj_mse"] = adj_mse(est, truth)

    _write_summary(args.out, args.format, payload)
    gio.write_plot_csv(args.out / "plot.csv", y, est, lo, hi, index=labels)
    return 0


def cmd_changepoints(args) -> int:
    y, graph, native, dates = _load_inputs(args)
    if not native:
        raise CliError("changepoints needs a time series (path graph in node order)")
    n = graph.n
    hyper, _ = _hyper(args, n)
    chain = chain_from_order(range(n))
    samples = run_chain(y, chain, _sampler_config(args), hyper, derive_seed(args.seed, 0))
    summary = summarize(samples)
    part = sparsify(summary, hyper, n, chain)
    cps = change_points(part, chain)
    labels = _index_labels(dates, n)
    args.out.mkdir(parents=True, exist_ok=True)
    rows = [{"index": int(c), "label": labels[c], "next": labels[c + 1],
             "before": float(summary.theta_mean[c]), "after": float(summary.theta_mean[c + 1])} for c in cps]
    if args.format == "json":
        gio.dump_json({"change_points": rows, "threshold": part.threshold,
                       "sigma_hat": summary.sigma_hat, "num_blocks": part.num_blocks}, args.out / "changepoints.json")
    else:
        lines = ["index,label,next,before,after"]
        lines += [f"{r['index']},{r['label']},{r['next']},{r['before']!r},{r['after']!r}" for r in rows]
        (args.out / "changepoints.csv").write_text("\n".join(lines) + "\n")
    gio.write_plot_csv(args.out / "plot.csv", y, summary.theta_mean, summary.band_lo, summary.band_hi, index=labels)
    return 0


def _parse_methods(text):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise CliError(f"unknown method(s): {', '.join(bad) or '(none)'}")
    return methods


def _cell_for(design: str, sigma: float, n: int) -> TableCell:
    kind, _, arg = design.partition(":")
    try:
        if kind == "chain":
            return TableCell("chain", arg or "even", sigma, n)
        if kind == "lattice":
            return TableCell("lattice", float(arg or 10), sigma, 256)
        if kind == "trees":
            return TableCell("tree", int(arg or 0), sigma, 200)
    except ValueError:
        pass
    raise CliError(f"bad --design value {design!r}")


def _write_results(args, results):
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        (args.out / "results.csv").write_text(gio.results_to_csv(results))
    else:
        gio.dump_json([asdict(r) for r in results], args.out / "results.json")
    table = gio.format_results(results)
    (args.out / "table.txt").write_text(table)
    sys.stdout.write(table)


def cmd_simulate(args) -> int:
    sigmas = args.sigma or [0.3]
    cells = [_cell_for(args.design, s, args.n) for s in sigmas]
    for c in cells:
        c.signal()  # validate the design before spending time
    _, overrides = _hyper(args, 2)
    if args.write_data:
        args.out.mkdir(parents=True, exist_ok=True)
        spec = cells[0].signal()
        write_edge_list(spec.graph, args.out / "graph.txt")
        gio.write_signal(add_noise(spec, spec.sigma, derive_seed(args.seed, 0, 0, 0)), args.out / "signal.txt")
        gio.write_signal(spec.theta0, args.out / "truth.txt")
    results = run_table(cells, _parse_methods(args.methods), args.reps, args.seed, _sampler_config(args),
                        hyper_overrides=overrides)
    _write_results(args, results)
    return 0


def cmd_table(args) -> int:
    _, overrides = _hyper(args, 2)
    results = run_table(TABLES[args.name](), _parse_methods(args.methods), args.reps, args.seed,
                        _sampler_config(args), hyper_overrides=overrides)
    _write_results(args, results)
    return 0


COMMANDS = {
    "denoise": cmd_denoise,
    "changepoints": cmd_changepoints,
    "simulate": cmd_simulate,
    "table": cmd_table,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="graphfuse: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, GraphError, ValueError, OSError, KeyError) as exc:
        print(f"graphfuse: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
