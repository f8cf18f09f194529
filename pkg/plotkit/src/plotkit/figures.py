"""Render convergence and sweep figures from harness CSV files.

This package never recomputes optimization quantities: every plotted value
is read verbatim from a CSV produced by the experiment harness, and the
plotting functions return the parsed series so tests can checksum them
against an independent parse of the same file.

Supported schemas:

* trajectory CSV: columns ``iteration``, ``wsr``, ``power_bs*``, ...
* aggregate CSV: an axis column (e.g. ``p_max_dbw`` or ``epsilon``)
  followed by ``trials``, ``failures``, ``mean_wsr``, ``std_wsr``,
  ``mean_iterations``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """CSV does not conform to the expected schema."""


def _read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise SchemaError(f"{path}: no data rows below the header")
    return header, body


def _column(header, body, name, path):
    if name not in header:
        raise SchemaError(
            f"{path}: missing column {name!r}; available: {header}")
    j = header.index(name)
    return np.array([float(row[j]) for row in body])


def read_trajectory_csv(path) -> dict:
    """Parse a trajectory CSV into {'iteration': ..., 'wsr': ...}."""
    header, body = _read_rows(path)
    return {
        "iteration": _column(header, body, "iteration", path),
        "wsr": _column(header, body, "wsr", path),
    }


def read_sweep_csv(path, x_key: str) -> dict:
    """Parse an aggregate CSV into axis/mean/std arrays."""
    header, body = _read_rows(path)
    return {
        "x": _column(header, body, x_key, path),
        "mean_wsr": _column(header, body, "mean_wsr", path),
        "std_wsr": _column(header, body, "std_wsr", path),
    }


def plot_convergence(csv_paths, out_path, labels=None) -> list[dict]:
    """Weighted sum-rate versus iteration; one series per input CSV.

    Returns the plotted series (parsed values, unmodified) for testing.
    """
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    if labels is None:
        labels = [Path(p).stem for p in csv_paths]
    if len(labels) != len(csv_paths):
        raise SchemaError("need exactly one label per input CSV")
    series = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for path, label in zip(csv_paths, labels):
        data = read_trajectory_csv(path)
        marker = "o" if len(data["iteration"]) <= 40 else None
        ax.plot(data["iteration"], data["wsr"], marker=marker, label=label)
        series.append({"label": label, **data})
    ax.set_xlabel("iteration")
    ax.set_ylabel("weighted sum-rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return series


def plot_sweep(csv_path, x_key, out_path) -> dict:
    """Mean weighted sum-rate versus a sweep axis with a stdev band.

    Few-point sweeps (<= 3 values) render as bars with error whiskers,
    longer ones as a line with a shaded band.  Returns the parsed series.
    """
    data = read_sweep_csv(csv_path, x_key)
    x, mean, std = data["x"], data["mean_wsr"], data["std_wsr"]
    fig, ax = plt.subplots(figsize=(6, 4))
    if len(x) <= 3:
        pos = np.arange(len(x))
        ax.bar(pos, mean, yerr=std, width=0.6, capsize=6)
        ax.set_xticks(pos)
        ax.set_xticklabels([format(v, "g") for v in x])
    else:
        order = np.argsort(x)
        ax.plot(x[order], mean[order], marker="o")
        ax.fill_between(x[order], (mean - std)[order], (mean + std)[order],
                        alpha=0.25)
    ax.set_xlabel(x_key)
    ax.set_ylabel("average sum-rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return data
