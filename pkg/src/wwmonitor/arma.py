"""Minimal ARMA/ARIMA machinery: CSS fitting, residuals, diagnostics.

Estimation is conditional sum of squares under a mean parameterization:
after d-fold differencing, the model is

    (w_t - mu) = sum_i ar_i (w_{t-i} - mu) + e_t + sum_j ma_j e_{t-j}

with one-step errors conditioned on the first p observations (presample
errors set to zero). The optimizer is a derivative-free simplex with
restarts from method-of-moments starting values; non-stationary or
non-invertible candidates are repelled by a barrier on the polynomial
root moduli.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.optimize import minimize
from scipy.stats import chi2

_ROOT_MARGIN = 1.0 + 1e-6


class ConvergenceError(RuntimeError):
    """The CSS optimizer failed to reach an admissible model."""


@dataclass(frozen=True)
class ArmaModel:
    p: int
    d: int
    q: int
    ar_coeffs: tuple[float, ...]
    ma_coeffs: tuple[float, ...]
    intercept: float  # mean of the d-differenced process
    innovation_sd: float

    def __post_init__(self):
        if len(self.ar_coeffs) != self.p or len(self.ma_coeffs) != self.q:
            raise ValueError("coefficient counts must match (p, q)")
        if not self.innovation_sd > 0:
            raise ValueError("innovation_sd must be positive")

    def is_stationary(self) -> bool:
        return _min_root_modulus(np.asarray(self.ar_coeffs), sign=-1.0) > 1.0

    def is_invertible(self) -> bool:
        return _min_root_modulus(np.asarray(self.ma_coeffs), sign=1.0) > 1.0


def _min_root_modulus(coeffs: np.ndarray, sign: float) -> float:
    """Smallest root modulus of 1 + sign*c1 z + ... + sign*ck z^k (inf if degree 0)."""
    if coeffs.size == 0 or not np.any(coeffs):
        return np.inf
    ascending = np.r_[1.0, sign * coeffs]
    roots = np.roots(ascending[::-1])
    if roots.size == 0:
        return np.inf
    return float(np.min(np.abs(roots)))


def acf(x, nlags: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..nlags (biased 1/N covariance)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if nlags >= n:
        raise ValueError("nlags must be below the series length")
    xc = x - x.mean()
    denom = np.dot(xc, xc)
    if denom == 0:
        raise ValueError("autocorrelation undefined for a constant series")
    return np.array([np.dot(xc[k:], xc[: n - k]) / denom for k in range(nlags + 1)])


def css_residuals(w, mu: float, ar, ma) -> np.ndarray:
    """Conditional one-step errors of the (already differenced) series.

    Errors are produced for t = p..len(w)-1 with presample errors zero.
    """
    w = np.asarray(w, dtype=float)
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    p = ar.size
    if w.size <= p:
        raise ValueError("series shorter than the AR order")
    wc = w - mu
    z = wc[p:].copy()
    for i in range(1, p + 1):
        z -= ar[i - 1] * wc[p - i : w.size - i]
    if ma.size:
        z = signal.lfilter([1.0], np.r_[1.0, ma], z)
    return z


def css_objective(y, p: int, d: int, q: int, mu: float, ar, ma) -> float:
    """Conditional sum of squared one-step errors after d-fold differencing."""
    w = np.diff(np.asarray(y, dtype=float), n=d) if d else np.asarray(y, dtype=float)
    e = css_residuals(w, mu, ar, ma)
    return float(np.dot(e, e))


def _yule_walker(w: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return np.empty(0)
    try:
        r = acf(w, p)
    except ValueError:
        return np.zeros(p)
    R = np.array([[r[abs(i - j)] for j in range(p)] for i in range(p)])
    try:
        return np.linalg.solve(R, r[1:])
    except np.linalg.LinAlgError:
        return np.zeros(p)


def fit_arma_css(y, p: int, d: int, q: int) -> ArmaModel:
    """Fit an ARIMA(p, d, q) by minimizing the conditional sum of squares."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    if min(p, d, q) < 0:
        raise ValueError("orders must be non-negative")
    if y.size <= 10 * (p + q + 1):
        raise ValueError(f"need more than {10 * (p + q + 1)} observations for ({p},{d},{q})")
    w = np.diff(y, n=d) if d else y
    if w.std() < 1e-12 * max(1.0, abs(w.mean())):
        raise ConvergenceError("near-constant series after differencing")

    ssr0 = float(np.sum((w - w.mean()) ** 2))
    barrier = 10.0 * ssr0 + 1.0

    def objective(params: np.ndarray) -> float:
        mu, ar, ma = params[0], params[1 : 1 + p], params[1 + p :]
        m_ar = _min_root_modulus(ar, sign=-1.0)
        m_ma = _min_root_modulus(ma, sign=1.0)
        worst = min(m_ar, m_ma)
        if worst <= _ROOT_MARGIN:
            return barrier * (1.0 + (_ROOT_MARGIN - worst))
        e = css_residuals(w, mu, ar, ma)
        return float(np.dot(e, e))

    starts = [np.r_[w.mean(), _yule_walker(w, p), np.zeros(q)]]
    if p or q:
        starts.append(np.r_[w.mean(), np.zeros(p + q)])
    # deduplicate identical starting points
    uniq = []
    for s in starts:
        if not any(np.array_equal(s, u) for u in uniq):
            uniq.append(s)

    best = None
    for x0 in uniq:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-8, "maxiter": 4000 * (p + q + 1), "maxfev": 4000 * (p + q + 1)},
        )
        if best is None or res.fun < best.fun:
            best = res
    assert best is not None
    if not np.isfinite(best.fun) or best.fun >= barrier:
        raise ConvergenceError(f"CSS optimization did not reach an admissible model for ({p},{d},{q})")

    mu = float(best.x[0])
    ar = tuple(float(v) for v in best.x[1 : 1 + p])
    ma = tuple(float(v) for v in best.x[1 + p :])
    n_eff = w.size - p
    sd = float(np.sqrt(best.fun / n_eff))
    if sd <= 0:
        sd = np.finfo(float).tiny
    return ArmaModel(p, d, q, ar, ma, mu, sd)


def arma_residuals(model: ArmaModel, y) -> np.ndarray:
    """One-step-ahead residuals aligned to y; burn-in entries are NaN.

    The flagged burn-in is max(p, d, q), widened to d+p when differencing
    plus AR conditioning leave no one-step error to compute earlier.
    """
    y = np.asarray(y, dtype=float)
    if y.size < max(model.p, model.q) + 1:
        raise ValueError("series too short for residuals")
    w = np.diff(y, n=model.d) if model.d else y
    e = css_residuals(w, model.intercept, model.ar_coeffs, model.ma_coeffs)
    out = np.full(y.size, np.nan)
    out[model.d + model.p :] = e
    burn = max(model.p, model.d, model.q, model.d + model.p)
    out[:burn] = np.nan
    return out


def ljung_box_test(x, lags: int) -> float:
    """Ljung-Box portmanteau p-value against chi-square with `lags` df."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if lags < 1:
        raise ValueError("lags must be >= 1")
    if lags >= n / 2:
        raise ValueError(f"lags ({lags}) must be below half the series length ({n})")
    rho = acf(x, lags)[1:]
    q = n * (n + 2) * np.sum(rho**2 / (n - np.arange(1, lags + 1)))
    return float(chi2.sf(q, df=lags))


def simulate_arma(model: ArmaModel, n: int, seed, burn: int = 500) -> np.ndarray:
    """Simulate n values from the model; deterministic given the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not model.is_stationary():
        raise ValueError("cannot simulate from a non-stationary model")
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, model.innovation_sd, size=burn + n)
    b = np.r_[1.0, np.asarray(model.ma_coeffs)]
    a = np.r_[1.0, -np.asarray(model.ar_coeffs)]
    w = signal.lfilter(b, a, e) + model.intercept
    out = w[burn:]
    for _ in range(model.d):
        out = np.cumsum(out)
    return out
