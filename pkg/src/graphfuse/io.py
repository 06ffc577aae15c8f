"""File formats: signals, stock price CSVs, summaries, plot data and result tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from datetime import date, datetime
from pathlib import Path

import numpy as np

from .experiments import ExperimentResult
from .graph import Graph, gen_chain
from .posterior import BlockPartition, PosteriorSummary

log = logging.getLogger(__name__)

PRICE_COLUMNS = ("Adj Close", "Adjusted Close", "Adj_Close", "adj_close", "adjclose")
DATE_FORMATS = ("%Y-%m-%d", "%m/%d/%Y")


# -- signals ------------------------------------------------------------------

def read_signal(path) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise ValueError(f"{path}: no values")
    y = np.asarray(values)
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{path}: non-finite values")
    return y


def write_signal(y, path) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in y))


# -- stock prices -------------------------------------------------------------

@dataclass(frozen=True)
class StockSeries:
    dates: tuple[date, ...]   # date of each cumulative-return point
    y: np.ndarray
    graph: Graph
    skipped: int


def parse_date(text: str) -> date:
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise ValueError(f"unparseable date {text!r}")


def _pick_column(header, wanted, candidates, what):
    if wanted is not None:
        if wanted not in header:
            raise ValueError(f"missing {what} column {wanted!r}")
        return wanted
    for c in candidates:
        if c in header:
            return c
    raise ValueError(f"missing {what} column (looked for {', '.join(candidates)})")


def ingest_stock_csv(path, date_from=None, date_to=None, date_column: str | None = None,
                     price_column: str | None = None, log_returns: bool = False) -> StockSeries:
    """Cumulative daily returns of a price series, ready for chain denoising.

    Rows whose date or price cannot be parsed are skipped and counted.
    """
    if isinstance(date_from, str):
        date_from = parse_date(date_from)
    if isinstance(date_to, str):
        date_to = parse_date(date_to)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        dcol = _pick_column(header, date_column, ("Date", "date", "DATE"), "date")
        pcol = _pick_column(header, price_column, PRICE_COLUMNS, "price")
        rows = []
        skipped = 0
        for rec in reader:
            try:
                d = parse_date(rec[dcol] or "")
                p = float(rec[pcol])
            except (TypeError, ValueError):
                skipped += 1
                continue
            if not (math.isfinite(p) and p > 0):
                skipped += 1
                continue
            if date_from is not None and d < date_from:
                continue
            if date_to is not None and d > date_to:
                continue
            rows.append((d, p))
    if skipped:
        log.warning("skipped %d unparseable rows in %s", skipped, path)
    rows.sort(key=lambda r: r[0])
    if len(rows) < 3:
        raise ValueError(f"{path}: need at least 3 usable price rows, found {len(rows)}")
    prices = np.array([p for _, p in rows])
    if log_returns:
        r = np.diff(np.log(prices))
    else:
        r = prices[1:] / prices[:-1] - 1.0
    y = np.cumsum(r)
    return StockSeries(tuple(d for d, _ in rows[1:]), y, gen_chain(y.shape[0]), skipped)


# -- summaries ----------------------------------------------------------------

def _floats(a) -> list[float]:
    return [float(v) for v in a]


def summary_to_dict(summary: PosteriorSummary, partition: BlockPartition | None = None,
                    change_points=None, **extra) -> dict:
    out = {
        "theta_mean": _floats(summary.theta_mean),
        "band_lo": _floats(summary.band_lo),
        "band_hi": _floats(summary.band_hi),
        "sigma_hat": float(summary.sigma_hat),
        "level": float(summary.level),
    }
    if partition is not None:
        out["blocks"] = [int(v) for v in partition.labels]
        out["threshold"] = float(partition.threshold)
    if change_points is not None:
        out["change_points"] = list(change_points)
    out.update(extra)
    return out


def summary_from_dict(d: dict) -> PosteriorSummary:
    return PosteriorSummary(
        theta_mean=np.asarray(d["theta_mean"], dtype=float),
        band_lo=np.asarray(d["band_lo"], dtype=float),
        band_hi=np.asarray(d["band_hi"], dtype=float),
        sigma_hat=float(d["sigma_hat"]),
        level=float(d["level"]),
    )


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def write_plot_csv(path, y, estimate, lo=None, hi=None, index=None) -> None:
    n = len(y)
    index = range(n) if index is None else index
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "y", "estimate", "lo", "hi"])
    for i, idx in enumerate(index):
        w.writerow([
            idx,
            repr(float(y[i])),
            repr(float(estimate[i])),
            "" if lo is None else repr(float(lo[i])),
            "" if hi is None else repr(float(hi[i])),
        ])
    Path(path).write_text(buf.getvalue())


# -- result tables ------------------------------------------------------------

RESULT_FIELDS = [f.name for f in fields(ExperimentResult)]


def results_to_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in results:
        w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return buf.getvalue()


def results_from_csv(text: str) -> list[ExperimentResult]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(ExperimentResult(
            cell=rec["cell"],
            sigma=float(rec["sigma"]),
            method=rec["method"],
            reps=int(rec["reps"]),
            mse_mean=float(rec["mse_mean"]),
            mse_se=float(rec["mse_se"]),
            adj_mse_mean=float(rec["adj_mse_mean"]),
            adj_mse_se=float(rec["adj_mse_se"]),
            seed=int(rec["seed"]),
        ))
    return out


def format_results(results) -> str:
    """Aligned text table, one row per cell, ``mean(se)`` per method and metric."""
    methods = list(dict.fromkeys(r.method for r in results))
    cells = list(dict.fromkeys((r.cell, r.sigma) for r in results))
    lookup = {(r.cell, r.sigma, r.method): r for r in results}
    header = ["design", "sigma"]
    for m in methods:
        header += [f"{m} MSE", f"{m} adj MSE"]
    rows = [header]
    for cell, sigma in cells:
        row = [cell, f"{sigma:g}"]
        for m in methods:
            r = lookup.get((cell, sigma, m))
            if r is None:
                row += ["-", "-"]
            else:
                row += [f"{r.mse_mean:.3f}({r.mse_se:.3f})", f"{r.adj_mse_mean:.4f}({r.adj_mse_se:.4f})"]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
