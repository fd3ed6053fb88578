"""Pointwise confidence intervals for the national curves.

The quantile curve's spread is read directly off the per-day plant
rates (percentile interval). The pooled curve has no per-day replicate
structure, so a parametric residual bootstrap is used instead: fit an
ARIMA, resample centered residuals with replacement, rebuild replicate
series on the fitted values, and take per-day quantiles across
replicates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregation import NationalCurve, _daily_quantile
from .arma import arma_residuals, fit_arma_css
from .excretion import ExcretorsPanel
from .series import DailySeries


@dataclass(frozen=True)
class BootstrapConfig:
    replications: int = 1000
    alpha: float = 0.05
    seed: int = 0
    model_order: tuple[int, int, int] = (1, 0, 3)

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError("need at least 100 replications for interval output")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")


@dataclass(frozen=True)
class PercentileInterval:
    lower: DailySeries
    upper: DailySeries
    level: float

    def __post_init__(self):
        if self.lower.start_date != self.upper.start_date or len(self.lower) != len(self.upper):
            raise ValueError("interval bounds must share one grid")
        with np.errstate(invalid="ignore"):
            if np.any(self.lower.values > self.upper.values):
                raise ValueError("lower bound exceeds upper bound")


def method2_pointwise_interval(panel: ExcretorsPanel, alpha: float) -> PercentileInterval:
    """Per-day (alpha/2, 1-alpha/2) quantiles of plant per-capita rates.

    Days with fewer than 2 reporting plants are flagged missing.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    _, rates = panel.rate_matrix()
    lo, counts = _daily_quantile(rates, alpha / 2.0)
    hi, _ = _daily_quantile(rates, 1.0 - alpha / 2.0)
    thin = counts < 2
    lo[thin] = np.nan
    hi[thin] = np.nan
    start = panel.start_date
    return PercentileInterval(
        DailySeries(start, lo, f"p{alpha / 2:g}"),
        DailySeries(start, hi, f"p{1 - alpha / 2:g}"),
        level=1.0 - alpha,
    )


def bootstrap_percentile_ci(curve: NationalCurve, cfg: BootstrapConfig) -> PercentileInterval:
    """Residual-bootstrap percentile interval for a national curve.

    Steps: fit ARIMA(model_order) to the curve; form fitted values and
    centered one-step residuals; draw B residual resamples (iid, with
    replacement, one derived RNG stream per replicate so parallel
    evaluation stays deterministic); rebuild y(b) = fitted + resample;
    return per-day empirical (alpha/2, 1-alpha/2) quantiles across
    replicates.
    """
    y = curve.series.values
    if np.isnan(y).any():
        raise ValueError("curve has missing days; bootstrap needs a complete series")
    p, d, q = cfg.model_order
    model = fit_arma_css(y, p, d, q)
    resid = arma_residuals(model, y)
    ok = ~np.isnan(resid)
    pool = resid[ok]
    # centered and sorted: iid resampling ignores residual order, and the
    # sort makes the output literally independent of it
    pool = np.sort(pool - pool.mean())
    fitted = np.where(ok, y - resid, y)  # burn-in days keep the observed value

    n = y.size
    reps = np.empty((cfg.replications, n))
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    for b, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        reps[b] = fitted + rng.choice(pool, size=n, replace=True)

    lo = np.quantile(reps, cfg.alpha / 2.0, axis=0, method="linear")
    hi = np.quantile(reps, 1.0 - cfg.alpha / 2.0, axis=0, method="linear")
    start = curve.series.start_date
    return PercentileInterval(
        DailySeries(start, lo, "boot-lower"),
        DailySeries(start, hi, "boot-upper"),
        level=1.0 - cfg.alpha,
    )


def write_interval_csv(interval: PercentileInterval, center: DailySeries, path: str | Path) -> None:
    """CSV export: date, lower, center (fitted or median), upper."""
    if center.start_date != interval.lower.start_date or len(center) != len(interval.lower):
        raise ValueError("center series must share the interval grid")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "lower", "center", "upper"])
        for i, day in enumerate(interval.lower.dates()):
            def fmt(v: float) -> str:
                return "" if np.isnan(v) else repr(float(v))
            w.writerow([day.isoformat(), fmt(interval.lower.values[i]), fmt(center.values[i]), fmt(interval.upper.values[i])])
