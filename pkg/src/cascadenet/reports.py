"""Tabular summaries of a trained cascade, as lists of row dicts.

These back the CSV reports written by the command-line tool and are handy
on their own for notebooks and tests.
"""
from __future__ import annotations

import numpy as np

from .dataset import Dataset, Partition, normalized_time


def rmse(err) -> float:
    return float(np.sqrt(np.mean(np.square(err)))) if len(err) else float("nan")


def sweep_rows(sweep) -> list[dict]:
    """One row per k of a principal-component sweep."""
    return [
        {
            "k": r.k,
            "train_rmse": r.train_rmse,
            "val_rmse": r.val_rmse,
            "test_rmse": r.test_rmse,
            "n_nets_kept": r.n_nets_kept,
            "selected": int(r.k == sweep.best_k),
        }
        for r in sweep.records
    ]


def per_net_rows(cascade, data: Dataset, partition: Partition) -> list[dict]:
    """Every candidate net in recruitment order.

    ``train_rmse`` and ``val_rmse`` are the cascade errors with the candidate
    included, as recorded during training. For kept nets ``test_rmse`` is
    the cascade test error after that net; rejected candidates have no
    stored parameters, so their test error is left empty.
    """
    cum = cascade.cumulative_predictions(data.X)
    test = partition.test_idx
    rows = []
    kept_seen = 0
    for j, rec in enumerate(cascade.history, start=1):
        test_rmse = None
        if rec.kept:
            test_rmse = rmse(cum[kept_seen][test] - data.year[test])
            kept_seen += 1
        rows.append(
            {
                "candidate": j,
                "depth": rec.depth,
                "kept": int(rec.kept),
                "train_rmse": rec.train_rmse,
                "val_rmse": rec.val_rmse,
                "test_rmse": test_rmse,
                "iterations": rec.iterations,
                "converged_by": rec.converged_by,
            }
        )
    return rows


def prediction_rows(cascade, data: Dataset, partition: Partition) -> list[dict]:
    """Predicted against actual year for every sample."""
    cum = cascade.cumulative_predictions(data.X)
    labels = partition.label_of(len(data))
    return [
        {
            "index": i,
            "year": float(data.year[i]),
            "source_model": int(data.source_model[i]),
            "partition": labels[i],
            "predicted": float(cum[-1][i]),
            "predicted_linear": float(cum[0][i]),
        }
        for i in range(len(data))
    ]


def per_year_rows(cascade, data: Dataset, partition: Partition, first_year=None, n_years=None) -> list[dict]:
    """RMSE per year across source models, for the linear net alone and the full cascade.

    Normalized time ``t`` maps the earliest year to 0 and the latest to 1
    unless ``first_year`` and ``n_years`` are given.
    """
    cum = cascade.cumulative_predictions(data.X)
    years = np.unique(data.year)
    if first_year is None:
        first_year = float(years[0])
    if n_years is None:
        n_years = int(round(years[-1] - years[0])) + 1
    t = normalized_time(years, first_year, n_years)
    labels = partition.label_of(len(data))
    rows = []
    for y, ty in zip(years, t):
        sel = np.flatnonzero(data.year == y)
        lin = rmse(cum[0][sel] - y)
        full = rmse(cum[-1][sel] - y)
        rows.append(
            {
                "year": float(y),
                "t": float(ty),
                "partition": labels[sel[0]],
                "rmse_linear": lin,
                "rmse_cascade": full,
                "improvement": lin - full,
            }
        )
    return rows


def late_vs_early(rows, partitions=("test",)) -> tuple[float, float]:
    """Mean per-year improvement for ``t > 0.5`` and for ``t <= 0.5``.

    Only years whose partition is listed are used.
    """
    late = [r["improvement"] for r in rows if r["partition"] in partitions and r["t"] > 0.5]
    early = [r["improvement"] for r in rows if r["partition"] in partitions and r["t"] <= 0.5]
    return float(np.mean(late)) if late else float("nan"), float(np.mean(early)) if early else float("nan")


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(rows, comments=(), columns=None) -> str:
    """CSV with ``#`` comment lines, a header row and one line per row dict."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"
