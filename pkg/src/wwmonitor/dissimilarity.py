"""Dissimilarity measures between two equal-length time series.

Three measures are supported:

* ``l2``        Euclidean distance  sqrt(sum (x_i - y_i)^2)
* ``corr``      2 * (1 - r)  with r the Pearson correlation
* ``crosscorr`` sqrt((1 - r) / sum_{k=1..K} CC_k)

CC_k is the sample cross-correlation at lag k: the lag-k cross-covariance
(1/N normalization, x leading y) divided by the two sample standard
deviations. The cross-correlation measure is undefined whenever the lag
sum is not positive; callers must skip or fall back in that case.

Missing values are rejected, not skipped: callers compare curves rebuilt
on a full daily grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MEASURES = ("l2", "corr", "crosscorr")


class DissimilarityUndefinedError(ValueError):
    """The cross-correlation denominator is not positive for this pair."""


@dataclass(frozen=True)
class DissimilarityConfig:
    measure: str = "corr"
    max_lag: int | None = None  # None: floor(10*log10(N)), clamped below N

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.max_lag is not None and self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")

    def effective_lag(self, n: int) -> int:
        if self.max_lag is not None:
            if self.max_lag >= n:
                raise ValueError(f"max_lag {self.max_lag} must be < series length {n}")
            return self.max_lag
        return max(1, min(int(math.floor(10 * math.log10(n))), n - 1))


def _check_pair(x, y, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("series must be 1-d")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise ValueError(f"series too short (need >= {min_len})")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ValueError("missing values are not allowed; rebuild on a full grid first")
    return x, y


def l2_distance(x, y) -> float:
    x, y = _check_pair(x, y)
    return float(np.sqrt(np.sum((x - y) ** 2)))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.array_equal(x, y):
        # exact identity; avoids r drifting a few ulp past 1
        if x.std() == 0:
            raise ValueError("correlation undefined for a constant series")
        return 1.0
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.sum(xc * xc))
    sy = np.sqrt(np.sum(yc * yc))
    if sx == 0 or sy == 0:
        raise ValueError("correlation undefined for a constant series")
    return float(np.clip(np.dot(xc, yc) / (sx * sy), -1.0, 1.0))


def corr_dissimilarity(x, y) -> float:
    """2(1-r); 0 for perfectly correlated pairs, 4 for anti-correlated ones."""
    x, y = _check_pair(x, y, min_len=3)
    return 2.0 * (1.0 - _pearson(x, y))


def cross_correlation(x, y, lag: int) -> float:
    """Sample cross-correlation of x against y at a non-negative lag.

    Pairs x_{t+lag} with y_t, normalized by 1/N and the two full-series
    standard deviations (population form). Exposed so independent checks
    can evaluate the exact estimator the crosscorr measure sums over.
    """
    x, y = _check_pair(x, y)
    n = x.size
    if not 0 <= lag < n:
        raise ValueError(f"lag must be in [0, {n})")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = x.std()
    sy = y.std()
    if sx == 0 or sy == 0:
        raise ValueError("cross-correlation undefined for a constant series")
    cov = np.dot(xc[lag:], yc[: n - lag]) / n
    return float(cov / (sx * sy))


def crosscorr_dissimilarity(x, y, cfg: DissimilarityConfig | None = None) -> float:
    """sqrt((1-r) / sum of cross-correlations at lags 1..K).

    Raises DissimilarityUndefinedError when the lag sum is not positive
    (anti-correlated or lag-incoherent pairs make the radicand negative
    or the ratio ill-defined).
    """
    cfg = cfg or DissimilarityConfig(measure="crosscorr")
    x, y = _check_pair(x, y, min_len=3)
    k_max = cfg.effective_lag(x.size)
    denom = sum(cross_correlation(x, y, k) for k in range(1, k_max + 1))
    if not denom > 0:
        raise DissimilarityUndefinedError(
            f"cross-correlation sum over lags 1..{k_max} is {denom:.6g}; measure undefined"
        )
    r = _pearson(x, y)
    return float(np.sqrt((1.0 - r) / denom))


def dissimilarity(x, y, measure: str, cfg: DissimilarityConfig | None = None) -> float:
    """Dispatch by measure name."""
    if measure == "l2":
        return l2_distance(x, y)
    if measure == "corr":
        return corr_dissimilarity(x, y)
    if measure == "crosscorr":
        return crosscorr_dissimilarity(x, y, cfg)
    raise ValueError(f"unknown measure {measure!r}")
