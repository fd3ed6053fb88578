"""SVG figure emission (matplotlib Agg backend, deterministic output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .charts import ChartRun
from .series import DailySeries

plt.rcParams["svg.hashsalt"] = "wwmonitor"


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def curve_plot(curves: list[tuple[str, DailySeries]], path: str | Path,
               band: tuple[DailySeries, DailySeries] | None = None, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    if band is not None:
        lo, hi = band
        ax.fill_between(lo.dates(), lo.values, hi.values, color="0.8", label="IQR band")
    for label, series in curves:
        ax.plot(series.dates(), series.values, lw=1.2, label=label)
    ax.set_xlabel("date")
    ax.set_ylabel("rate per 100k")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.autofmt_xdate()
    _save(fig, path)


def ribbon_plot(center: DailySeries, lower: DailySeries, upper: DailySeries,
                path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.fill_between(lower.dates(), lower.values, upper.values, color="lightsteelblue", label="interval")
    ax.plot(center.dates(), center.values, color="tab:blue", lw=1.2, label="curve")
    ax.set_xlabel("date")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.autofmt_xdate()
    _save(fig, path)


def bar_plot(labels: list[str], values: list[float], path: str | Path,
             title: str = "", ylabel: str = "") -> None:
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(labels)), 4))
    ax.bar(range(len(labels)), values, color="tab:blue")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def chart_plot(run: ChartRun, path: str | Path, title: str = "",
               phase_boundary_index: int | None = None) -> None:
    """Chart trace with in-control points blue and out-of-control points red."""
    fig, ax = plt.subplots(figsize=(10, 4))
    x = run.dates if run.dates else np.arange(len(run))
    x = list(x)
    ok = ~run.signal
    ax.scatter([x[i] for i in np.flatnonzero(ok)], run.statistic[ok], s=12, color="tab:blue", label="in control")
    if run.signal.any():
        ax.scatter([x[i] for i in np.flatnonzero(run.signal)], run.statistic[run.signal], s=14, color="tab:red", label="out of control")
    if not np.isnan(run.upper).all():
        ax.plot(x, run.upper, color="0.3", lw=1.0, ls="--", label="limit")
    if not np.isnan(run.lower).all():
        ax.plot(x, run.lower, color="0.3", lw=1.0, ls="--")
    if phase_boundary_index is not None and 0 <= phase_boundary_index < len(x):
        ax.axvline(x[phase_boundary_index], color="tab:red", lw=1.0)
    ax.set_ylabel(f"{run.kind} statistic")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    if run.dates:
        fig.autofmt_xdate()
    _save(fig, path)
