"""Collapse the per-plant panel into one national daily indicator.

Two routes:

* method-1 pools the whole panel per day: 1e5 * (sum of excretors over
  reporting plants) / (sum of those plants' residents) -- a
  population-weighted ratio of sums.
* method-2 treats each day's per-capita plant rates as draws from the
  national curve and takes a quantile of them (median by default).

Quantiles use linear interpolation between order statistics
(h = (n-1)q), recorded in the curve metadata for comparability.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .excretion import ExcretorsPanel
from .series import DailySeries

METHOD1 = "method1"
METHOD2 = "method2"
QUANTILE_RULE = "linear"  # interpolation between order statistics, h=(n-1)q


@dataclass(frozen=True)
class AggregationConfig:
    method: str = METHOD1
    quantile_level: float = 0.5
    quantile_rule: str = QUANTILE_RULE

    def __post_init__(self):
        if self.method not in (METHOD1, METHOD2):
            raise ValueError(f"unknown aggregation method {self.method!r}")
        if not 0 < self.quantile_level < 1:
            raise ValueError("quantile_level must be in (0, 1)")
        if self.quantile_rule != QUANTILE_RULE:
            raise ValueError(f"unsupported quantile rule {self.quantile_rule!r}")


@dataclass(frozen=True)
class NationalCurve:
    series: DailySeries
    method: str
    n_plants_per_day: np.ndarray
    quantile_level: float | None = None
    quantile_rule: str | None = None

    def __post_init__(self):
        counts = np.asarray(self.n_plants_per_day, dtype=int).copy()
        if counts.size != len(self.series):
            raise ValueError("n_plants_per_day length must match the series")
        has_value = ~np.isnan(self.series.values)
        if np.any(counts[has_value] < 1):
            raise ValueError("curve has values on days with zero reporting plants")
        counts.flags.writeable = False
        object.__setattr__(self, "n_plants_per_day", counts)


def _daily_quantile(rates: np.ndarray, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-day quantile over non-missing plants; returns (values, counts)."""
    n_days = rates.shape[1]
    out = np.full(n_days, np.nan)
    counts = np.zeros(n_days, dtype=int)
    for t in range(n_days):
        col = rates[:, t]
        col = col[~np.isnan(col)]
        counts[t] = col.size
        if col.size:
            out[t] = np.quantile(col, q, method="linear")
    return out, counts


def aggregate_method1(panel: ExcretorsPanel) -> NationalCurve:
    """Pooled national curve: 1e5 * sum(E) / sum(residents), per day.

    Each day pools the plants that report on that day; days with no
    reporting plant are missing.
    """
    ids, excretors = panel.excretor_matrix()
    residents = np.array([panel.residents[p] for p in ids], dtype=float)[:, None]
    present = ~np.isnan(excretors)
    counts = present.sum(axis=0)
    e_sum = np.where(present, excretors, 0.0).sum(axis=0)
    r_sum = (present * residents).sum(axis=0)
    values = np.full(excretors.shape[1], np.nan)
    nz = counts > 0
    values[nz] = 1e5 * e_sum[nz] / r_sum[nz]
    series = DailySeries(panel.start_date, values, label="national method-1")
    return NationalCurve(series, METHOD1, counts)


def aggregate_method2(panel: ExcretorsPanel, cfg: AggregationConfig | None = None) -> NationalCurve:
    """Quantile national curve: per day, a quantile of plant per-capita rates."""
    cfg = cfg or AggregationConfig(method=METHOD2)
    _, rates = panel.rate_matrix()
    values, counts = _daily_quantile(rates, cfg.quantile_level)
    series = DailySeries(panel.start_date, values, label="national method-2")
    return NationalCurve(series, METHOD2, counts, cfg.quantile_level, cfg.quantile_rule)


def aggregate(panel: ExcretorsPanel, cfg: AggregationConfig) -> NationalCurve:
    if cfg.method == METHOD1:
        return aggregate_method1(panel)
    return aggregate_method2(panel, cfg)


def normalize_curve(curve: NationalCurve) -> NationalCurve:
    """Rescale into (0, 1] by dividing by the curve maximum."""
    values = curve.series.values
    if np.all(np.isnan(values)):
        raise ValueError("cannot normalize an all-missing curve")
    peak = np.nanmax(values)
    if not peak > 0:
        raise ValueError("cannot normalize: curve maximum is not positive")
    series = DailySeries(curve.series.start_date, values / peak, curve.series.label)
    return NationalCurve(series, curve.method, curve.n_plants_per_day, curve.quantile_level, curve.quantile_rule)


def iqr_band(panel: ExcretorsPanel) -> tuple[DailySeries, DailySeries]:
    """Per-day 0.25 and 0.75 quantiles of plant rates around the median curve."""
    _, rates = panel.rate_matrix()
    lo, _ = _daily_quantile(rates, 0.25)
    hi, _ = _daily_quantile(rates, 0.75)
    start = panel.start_date
    return DailySeries(start, lo, "p25"), DailySeries(start, hi, "p75")


def write_curve_csv(curve: NationalCurve, path: str | Path) -> None:
    """CSV export: date, value, n_plants (missing days written blank)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "value", "n_plants"])
        for i, day in enumerate(curve.series.dates()):
            v = curve.series.values[i]
            w.writerow([day.isoformat(), "" if np.isnan(v) else repr(float(v)), int(curve.n_plants_per_day[i])])


def read_curve_csv(path: str | Path) -> NationalCurve:
    """Read back a curve written by write_curve_csv (method tag not stored)."""
    days: list[dt.date] = []
    vals: list[float] = []
    counts: list[int] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            days.append(dt.date.fromisoformat(rec["date"]))
            vals.append(float(rec["value"]) if rec["value"] else float("nan"))
            counts.append(int(rec["n_plants"]))
    if not days:
        raise ValueError(f"{path}: empty curve file")
    series = DailySeries(days[0], np.array(vals), label=str(path))
    return NationalCurve(series, "file", np.array(counts))
