"""Sequential process-monitoring charts for the national indicator.

Four charts are provided:

* Shewhart X-chart: alarm when |x - mu| > L*sigma.
* One-sided upper CUSUM: C_i = max(0, x_i - (mu0 + K) + C_{i-1}) with
  reference value K = k*sigma; alarm when C_i exceeds the decision
  interval H = h*sigma. Its in-control average run length is
  approximated by Siegmund's formula.
* Residual Shewhart: an ARIMA model is trained on a phase-1 span and the
  X-chart runs on the one-step residuals of the whole series (handles
  autocorrelated indicators).
* Predictive control chart (PCC): sequential conjugate
  Normal-Inverse-Gamma updating; each step alarms when the new point
  falls outside the highest-predictive-density interval of the
  Student-t posterior predictive. Alarmed points are excluded from
  subsequent updates, so a persistent shift keeps alarming.

Alarm comparisons are strict (>) by default; the >= variant sits behind
a config flag.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import stdtrit  # Student-t quantile, low call overhead

from .arma import fit_arma_css, arma_residuals


@dataclass(frozen=True)
class ChartRun:
    """Per-day chart trace: input value, statistic, limits, alarm flag."""

    kind: str
    values: np.ndarray
    statistic: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    signal: np.ndarray
    dates: tuple[dt.date, ...] | None = None

    def __post_init__(self):
        for name in ("values", "statistic", "lower", "upper"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        sig = np.asarray(self.signal, dtype=bool).copy()
        sig.flags.writeable = False
        object.__setattr__(self, "signal", sig)
        n = self.values.size
        if not all(a.size == n for a in (self.statistic, self.lower, self.upper, self.signal)):
            raise ValueError("chart columns must share one length")
        if self.dates is not None and len(self.dates) != n:
            raise ValueError("dates length must match values")
        with np.errstate(invalid="ignore"):
            expected = (self.statistic > self.upper) | (self.statistic < self.lower)
        if not np.array_equal(expected, self.signal):
            raise ValueError("signal flags must equal strict limit exceedance")

    @property
    def first_alarm_index(self) -> int | None:
        idx = np.flatnonzero(self.signal)
        return int(idx[0]) if idx.size else None

    def __len__(self) -> int:
        return self.values.size


def write_chart_csv(run: ChartRun, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", run.kind])
        w.writerow(["index", "date", "value", "statistic", "lower", "upper", "signal"])
        for i in range(len(run)):
            w.writerow(
                [
                    i,
                    run.dates[i].isoformat() if run.dates else "",
                    repr(float(run.values[i])),
                    repr(float(run.statistic[i])),
                    repr(float(run.lower[i])),
                    repr(float(run.upper[i])),
                    int(run.signal[i]),
                ]
            )


def read_chart_csv(path: str | Path) -> ChartRun:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0] != "kind":
        raise ValueError(f"{path}: not a chart CSV")
    kind = rows[0][1]
    body = rows[2:]
    dates = tuple(dt.date.fromisoformat(r[1]) for r in body) if body and body[0][1] else None
    return ChartRun(
        kind=kind,
        values=np.array([float(r[2]) for r in body]),
        statistic=np.array([float(r[3]) for r in body]),
        lower=np.array([float(r[4]) for r in body]),
        upper=np.array([float(r[5]) for r in body]),
        signal=np.array([bool(int(r[6])) for r in body]),
        dates=dates,
    )


def _check_finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise ValueError(f"non-finite input value at index {bad[0]}")
    return x


# ---------------------------------------------------------------------------
# CUSUM


@dataclass(frozen=True)
class CusumConfig:
    mu0: float
    sigma: float
    k: float = 0.5
    h: float = 4.5
    reset_on_alarm: bool = False
    alarm_on_equal: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not (self.k > 0 and self.h > 0):
            raise ValueError("k and h must be positive")


def cusum_run(x, cfg: CusumConfig, dates: tuple[dt.date, ...] | None = None, c0: float = 0.0) -> ChartRun:
    """One-sided upper CUSUM; alarms when the statistic exceeds H = h*sigma.

    ``c0`` continues a previous run's statistic (streaming/chunked use);
    it defaults to the standard zero start.
    """
    x = _check_finite(x)
    if c0 < 0:
        raise ValueError("c0 must be non-negative")
    big_k = cfg.k * cfg.sigma
    big_h = cfg.h * cfg.sigma
    z = x - (cfg.mu0 + big_k)
    if cfg.reset_on_alarm:
        stat = np.empty(x.size)
        sig = np.zeros(x.size, dtype=bool)
        c = c0
        for i, zi in enumerate(z):
            c = max(0.0, zi + c)
            stat[i] = c
            alarmed = c >= big_h if cfg.alarm_on_equal else c > big_h
            sig[i] = alarmed
            if alarmed:
                c = 0.0
    else:
        # reflected cumulative sum: C_t = S_t - min(0, S_1..S_t) with
        # S_t = c0 + cumsum(z); identical to the max(0, .) recursion
        s = c0 + np.cumsum(z)
        stat = s - np.minimum.accumulate(np.minimum(s, 0.0))
        sig = stat >= big_h if cfg.alarm_on_equal else stat > big_h
    upper = np.full(x.size, big_h)
    if cfg.alarm_on_equal:
        # ChartRun's invariant is strict exceedance; nudge the recorded
        # limit so flags stay consistent for the >= variant.
        upper = np.nextafter(upper, -np.inf)
    return ChartRun("cusum", x, stat, np.full(x.size, np.nan), upper, sig, dates)


def siegmund_arl(k: float, h: float, delta: float) -> float:
    """Siegmund's ARL approximation for the one-sided CUSUM.

    ARL = (exp(-2*D*b) + 2*D*b - 1) / (2*D^2) with D = delta - k and
    b = h + 1.166 (continuity correction); the D -> 0 limit is b^2.
    ``delta`` is the mean shift in sigma units (0 gives the in-control
    ARL).
    """
    if not (k > 0 and h > 0):
        raise ValueError("k and h must be positive")
    b = h + 1.166
    d = delta - k
    x = -2.0 * d * b
    if abs(x) < 1e-6:
        # series expansion of (e^x - x - 1) / (x^2 / (2 b^2))
        return b * b * (1.0 + x / 3.0 + x * x / 12.0)
    return float((math.expm1(x) - x) / (2.0 * d * d))


def cusum_run_length_mc(
    k: float,
    h: float,
    n_runs: int,
    cap: int,
    seed,
    delta: float = 0.0,
) -> np.ndarray:
    """Monte Carlo run lengths (1-based alarm step) of the standardized CUSUM.

    Observations are iid N(delta, 1); runs without an alarm are censored
    at ``cap``. Vectorized over the still-running set, so large
    replications stay fast.
    """
    rng = np.random.default_rng(seed)
    rl = np.full(n_runs, cap, dtype=np.int64)
    c = np.zeros(n_runs)
    alive = np.arange(n_runs)
    t = 0
    while alive.size and t < cap:
        t += 1
        z = rng.standard_normal(alive.size) + delta
        c = np.maximum(0.0, c + z - k)
        alarmed = c > h
        rl[alive[alarmed]] = t
        keep = ~alarmed
        c = c[keep]
        alive = alive[keep]
    return rl


# ---------------------------------------------------------------------------
# Shewhart


@dataclass(frozen=True)
class ShewhartConfig:
    mu: float
    sigma: float
    L: float = 3.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")


def shewhart_run(x, cfg: ShewhartConfig, dates: tuple[dt.date, ...] | None = None) -> ChartRun:
    """X-chart: alarm when the observation leaves mu +/- L*sigma."""
    x = _check_finite(x)
    lo = np.full(x.size, cfg.mu - cfg.L * cfg.sigma)
    hi = np.full(x.size, cfg.mu + cfg.L * cfg.sigma)
    sig = (x > hi) | (x < lo)
    return ChartRun("shewhart", x, x, lo, hi, sig, dates)


def residual_shewhart_run(
    x,
    order: tuple[int, int, int],
    phase1: tuple[int, int],
    L: float = 3.0,
    dates: tuple[dt.date, ...] | None = None,
) -> ChartRun:
    """X-chart on one-step ARIMA residuals; the model is fit on phase 1 only.

    ``phase1`` is the (start, end) index slice of the training span, end
    exclusive. Burn-in residuals are NaN and never alarm.
    """
    x = _check_finite(x)
    p, d, q = order
    start, end = phase1
    if not 0 <= start < end <= x.size:
        raise ValueError("phase1 span out of range")
    model = fit_arma_css(x[start:end], p, d, q)
    resid = arma_residuals(model, x)
    lo = np.full(x.size, -L * model.innovation_sd)
    hi = np.full(x.size, L * model.innovation_sd)
    with np.errstate(invalid="ignore"):
        sig = (resid > hi) | (resid < lo)
    return ChartRun("residual_shewhart", x, resid, lo, hi, sig, dates)


# ---------------------------------------------------------------------------
# Predictive control chart


@dataclass(frozen=True)
class NigPrior:
    """Normal-Inverse-Gamma hyperparameters (location, weight, shape, scale)."""

    location: float
    weight: float
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.weight > 0 and self.shape > 0 and self.scale > 0):
            raise ValueError("weight, shape and scale must all be positive")


def pcc_prior_from_historical(values, shape: float = 2.0, weight: float | None = None) -> NigPrior:
    """Moment-matched prior: mean -> location, variance -> scale (via shape).

    ``weight`` is the effective prior sample size and defaults to the
    historical length. Zero-variance history leaves the scale undefined.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 historical values")
    var = float(v.var(ddof=1))
    if var <= 0:
        raise ValueError("historical span has zero variance; prior scale undefined")
    if shape <= 1:
        raise ValueError("shape must exceed 1 so the prior variance mean exists")
    return NigPrior(
        location=float(v.mean()),
        weight=float(weight if weight is not None else v.size),
        shape=float(shape),
        scale=var * (shape - 1.0),
    )


@dataclass(frozen=True)
class PccConfig:
    prior: NigPrior
    alpha: float
    n_train: int = 2
    historical: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.n_train < 0:
            raise ValueError("n_train must be >= 0")

    @classmethod
    def from_historical(cls, values, alpha: float, shape: float = 2.0, weight: float | None = None, n_train: int = 2) -> "PccConfig":
        return cls(
            prior=pcc_prior_from_historical(values, shape, weight),
            alpha=alpha,
            n_train=n_train,
            historical=tuple(float(v) for v in np.asarray(values, dtype=float)),
        )


def _nig_update(state: tuple[float, float, float, float], x: float) -> tuple[float, float, float, float]:
    m, w, a, b = state
    w1 = w + 1.0
    return (
        (w * m + x) / w1,
        w1,
        a + 0.5,
        b + w * (x - m) ** 2 / (2.0 * w1),
    )


def _nig_predictive(state: tuple[float, float, float, float]) -> tuple[float, float, float]:
    """(df, loc, scale) of the Student-t posterior predictive."""
    m, w, a, b = state
    return 2.0 * a, m, math.sqrt(b * (w + 1.0) / (a * w))


def pcc_run(x, cfg: PccConfig, dates: tuple[dt.date, ...] | None = None) -> ChartRun:
    """Bayesian predictive control chart.

    The first ``n_train`` observations only update the posterior. Each
    later observation is tested against the 100(1-alpha)% HPD interval
    of the Student-t posterior predictive -- by symmetry this equals the
    equal-tailed interval -- and alarms when it falls outside. Alarmed
    observations are excluded from subsequent updates.
    """
    x = _check_finite(x)
    if x.size < cfg.n_train:
        raise ValueError("series shorter than the training count")
    state = (cfg.prior.location, cfg.prior.weight, cfg.prior.shape, cfg.prior.scale)
    lo = np.full(x.size, np.nan)
    hi = np.full(x.size, np.nan)
    sig = np.zeros(x.size, dtype=bool)
    p_hi = 1.0 - cfg.alpha / 2.0
    for i, xi in enumerate(x):
        if i < cfg.n_train:
            state = _nig_update(state, xi)
            continue
        df, loc, scale = _nig_predictive(state)
        crit = float(stdtrit(df, p_hi))
        lo[i] = loc - crit * scale
        hi[i] = loc + crit * scale
        outside = xi > hi[i] or xi < lo[i]
        sig[i] = outside
        if not outside:
            state = _nig_update(state, xi)
    return ChartRun("pcc", x, x, lo, hi, sig, dates)


def alpha_for_arl(arl0: float) -> float:
    """Per-point false-alarm rate whose geometric run length matches ARL0."""
    if not np.isfinite(arl0):
        raise ValueError("ARL0 must be finite")
    if arl0 <= 1:
        raise ValueError("ARL0 must exceed 1")
    return 1.0 / arl0


def calibrate_pcc_alpha(cusum_cfg: CusumConfig) -> float:
    """Alpha matching the PCC false-alarm ARL to the CUSUM's in-control ARL."""
    return alpha_for_arl(siegmund_arl(cusum_cfg.k, cusum_cfg.h, 0.0))
