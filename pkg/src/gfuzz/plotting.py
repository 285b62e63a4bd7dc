"""Figures and CSV tables for the CLI report path."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return v


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_distribution(labels: Sequence[str], probs: Sequence[float], path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    try:
        xs = [float(s) for s in labels]
        width = min((b - a for a, b in zip(xs, xs[1:]) if b > a), default=1.0)
        ax.bar(xs, probs, width=width, align="edge", color="#4477aa")
        ax.set_xlabel("outcome")
    except ValueError:
        ax.bar(range(len(labels)), probs, color="#4477aa")
        ax.set_xticks(range(len(labels)), labels)
    ax.set_ylabel("probability")
    ax.set_title(title)
    return _save(fig, path)


def plot_pair_measurements(measured: Sequence[float], bound: float, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    finite = [m if math.isfinite(m) else float("nan") for m in measured]
    ax.plot(range(len(finite)), finite, "o", ms=4, color="#4477aa", label="measured")
    ax.axhline(bound, color="#cc3311", lw=1.2, label="claimed bound")
    ax.set_xlabel("database pair")
    ax.set_ylabel("divergence")
    ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)


def plot_divergence_table(table: dict[str, float], path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    names = list(table)
    vals = [table[n] if math.isfinite(table[n]) else float("nan") for n in names]
    ax.bar(names, vals, color="#228833")
    for i, n in enumerate(names):
        if not math.isfinite(table[n]):
            ax.annotate("inf", (i, 0), ha="center", va="bottom")
    ax.set_ylabel("value")
    ax.set_title(title)
    return _save(fig, path)


def plot_check_summary(names: Sequence[str], instances: Sequence[int], failures: Sequence[int],
                       path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(8, 3.8))
    idx = range(len(names))
    ax.bar([i - 0.2 for i in idx], instances, width=0.4, label="instances", color="#4477aa")
    ax.bar([i + 0.2 for i in idx], failures, width=0.4, label="failures", color="#cc3311")
    ax.set_xticks(list(idx), names, rotation=30, ha="right")
    ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)
