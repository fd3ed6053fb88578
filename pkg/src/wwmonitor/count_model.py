"""Negative-binomial INGARCH model for the rounded national indicator.

The conditional mean follows a linear recursion on past counts and past
conditional means,

    lambda_t = intercept + sum_i b_i * y_{t-i} + sum_j c_j * lambda_{t-j}

with lags taken from an IngarchSpec. Counts are NegBin(lambda_t, phi) in
the mean/dispersion parametrization (variance lambda + lambda^2/phi).

Fitting is quasi conditional maximum likelihood: regression parameters
maximize the Poisson conditional log-likelihood; the dispersion phi then
solves the Pearson moment equation

    sum (y_t - lambda_t)^2 / (lambda_t + lambda_t^2/phi) = T - n_params.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

_PHI_CAP = 1e8


class ConvergenceError(RuntimeError):
    """The quasi-likelihood optimizer failed."""


@dataclass(frozen=True)
class IngarchSpec:
    past_obs_lags: tuple[int, ...] = (1,)
    past_mean_lags: tuple[int, ...] = (2, 3, 4)
    link: str = "identity"

    def __post_init__(self):
        for lags in (self.past_obs_lags, self.past_mean_lags):
            if list(lags) != sorted(set(lags)) or any(l < 1 for l in lags):
                raise ValueError("lags must be distinct, sorted, positive integers")
        if self.link != "identity":
            raise ValueError("only the identity link is supported")
        object.__setattr__(self, "past_obs_lags", tuple(int(l) for l in self.past_obs_lags))
        object.__setattr__(self, "past_mean_lags", tuple(int(l) for l in self.past_mean_lags))

    @property
    def n_params(self) -> int:
        return 1 + len(self.past_obs_lags) + len(self.past_mean_lags)


@dataclass(frozen=True)
class IngarchFit:
    intercept: float
    obs_coeffs: tuple[float, ...]
    mean_coeffs: tuple[float, ...]
    dispersion: float
    lambda_path: np.ndarray
    loglik: float  # maximized Poisson quasi conditional log-likelihood
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        lam = np.asarray(self.lambda_path, dtype=float).copy()
        if np.any(lam <= 0):
            raise ValueError("fitted lambda path must be strictly positive")
        lam.flags.writeable = False
        object.__setattr__(self, "lambda_path", lam)

    def params(self) -> np.ndarray:
        return np.r_[self.intercept, self.obs_coeffs, self.mean_coeffs]


def _check_counts(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty 1-d array")
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y != np.round(y)):
        raise ValueError("y must be non-negative integers (round the indicator first)")
    return y


def lambda_step(spec: IngarchSpec, params, y_history, lam_history) -> float:
    """One step of the conditional-mean recursion from explicit histories.

    Histories are ordered oldest to newest, so ``y_history[-lag]`` is the
    count ``lag`` steps back; each history must be at least as long as the
    largest lag that consumes it.
    """
    params = np.asarray(params, dtype=float)
    if params.size != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters, got {params.size}")
    y_history = np.asarray(y_history, dtype=float)
    lam_history = np.asarray(lam_history, dtype=float)
    if spec.past_obs_lags and y_history.size < max(spec.past_obs_lags):
        raise ValueError("y_history shorter than the largest observation lag")
    if spec.past_mean_lags and lam_history.size < max(spec.past_mean_lags):
        raise ValueError("lam_history shorter than the largest mean lag")
    b = params[1 : 1 + len(spec.past_obs_lags)]
    c = params[1 + len(spec.past_obs_lags) :]
    acc = params[0]
    for coef, lag in zip(b, spec.past_obs_lags):
        acc += coef * y_history[-lag]
    for coef, lag in zip(c, spec.past_mean_lags):
        acc += coef * lam_history[-lag]
    return float(acc)


def lambda_path(spec: IngarchSpec, params, y) -> np.ndarray:
    """Conditional-mean recursion; presample y and lambda start at mean(y).

    ``params`` is the flat vector [intercept, obs coeffs..., mean
    coeffs...] in lag order. Raises when any lambda_t is non-positive
    (invalid parameter region).
    """
    y = _check_counts(y)
    params = np.asarray(params, dtype=float)
    if params.size != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters, got {params.size}")
    intercept = params[0]
    b = params[1 : 1 + len(spec.past_obs_lags)]
    c = params[1 + len(spec.past_obs_lags) :]
    ybar = float(y.mean())
    n = y.size
    lam = np.empty(n)
    for t in range(n):
        acc = intercept
        for coef, lag in zip(b, spec.past_obs_lags):
            acc += coef * (y[t - lag] if t - lag >= 0 else ybar)
        for coef, lag in zip(c, spec.past_mean_lags):
            acc += coef * (lam[t - lag] if t - lag >= 0 else ybar)
        if not acc > 0:
            raise ValueError(f"non-positive conditional mean at t={t}; invalid parameter region")
        lam[t] = acc
    return lam


def quasi_loglik(y, lam) -> float:
    """Poisson conditional log-likelihood up to the log(y!) constant."""
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return float(np.sum(y * np.log(lam) - lam))


def initial_params(y, spec: IngarchSpec) -> np.ndarray:
    """Moment-based start: mild coefficients, intercept matching the mean."""
    y = _check_counts(y)
    k = len(spec.past_obs_lags) + len(spec.past_mean_lags)
    coeffs = np.full(k, 0.1)
    ybar = max(float(y.mean()), 1e-3)
    intercept = max(ybar * (1.0 - coeffs.sum()), 1e-3)
    return np.r_[intercept, coeffs]


def _pearson_dispersion(y: np.ndarray, lam: np.ndarray, n_params: int) -> tuple[float, tuple[str, ...]]:
    resid2 = (y - lam) ** 2
    target = y.size - n_params

    def g(phi: float) -> float:
        return float(np.sum(resid2 / (lam + lam * lam / phi))) - target

    if g(_PHI_CAP) < 0:
        # even the Poisson limit leaves the Pearson statistic below its
        # degrees of freedom: no finite root, dispersion effectively infinite
        return _PHI_CAP, ("near-poisson",)
    lo = 1e-8
    if g(lo) > 0:
        return lo, ("extreme-overdispersion",)
    phi = float(brentq(g, lo, _PHI_CAP, xtol=1e-10, rtol=1e-12))
    # dispersion so large that the NB variance inflation (lam/phi) is
    # negligible everywhere: indistinguishable from Poisson in practice
    if phi >= 20.0 * float(lam.mean()):
        return phi, ("near-poisson",)
    return phi, ()


def fit_ingarch_qcml(y, spec: IngarchSpec) -> IngarchFit:
    """Fit the count model by quasi conditional maximum likelihood."""
    y = _check_counts(y)
    if y.size < 10 * spec.n_params:
        raise ValueError(f"need at least {10 * spec.n_params} observations")

    if np.all(y == y[0]):
        # no dynamics to estimate: the mean recursion collapses to the constant
        c = float(y[0])
        if c <= 0:
            raise ValueError("constant zero series cannot be fit")
        k = spec.n_params - 1
        lam = np.full(y.size, c)
        return IngarchFit(c, (0.0,) * len(spec.past_obs_lags), (0.0,) * len(spec.past_mean_lags),
                          _PHI_CAP, lam, quasi_loglik(y, lam), flags=("degenerate",))

    penalty = 1e12

    def objective(params: np.ndarray) -> float:
        try:
            lam = lambda_path(spec, params, y)
        except ValueError:
            return penalty
        return -quasi_loglik(y, lam)

    x0 = initial_params(y, spec)
    best = None
    for start in (x0, np.r_[x0[0], 0.5 * x0[1:]]):
        res = minimize(objective, start, method="L-BFGS-B",
                       options={"maxiter": 500, "ftol": 1e-12, "gtol": 1e-9})
        if best is None or res.fun < best.fun:
            best = res
    assert best is not None
    if not np.isfinite(best.fun) or best.fun >= penalty:
        raise ConvergenceError("quasi-likelihood optimization failed")

    n_obs = len(spec.past_obs_lags)
    intercept = float(best.x[0])
    obs_coeffs = tuple(float(v) for v in best.x[1 : 1 + n_obs])
    mean_coeffs = tuple(float(v) for v in best.x[1 + n_obs :])
    lam = lambda_path(spec, best.x, y)
    phi, flags = _pearson_dispersion(y, lam, spec.n_params)
    return IngarchFit(intercept, obs_coeffs, mean_coeffs, phi, lam, quasi_loglik(y, lam), flags)


def ingarch_simulate(params, dispersion: float, spec: IngarchSpec, n: int, seed, burn: int = 300) -> np.ndarray:
    """Simulate NB counts from the recursion; deterministic given the seed.

    Presample values start at the stationary mean intercept/(1 - sum of
    coefficients); the coefficient sum must stay below 1.
    """
    params = np.asarray(params, dtype=float)
    if params.size != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters")
    if not dispersion > 0:
        raise ValueError("dispersion must be positive")
    intercept = params[0]
    coeffs = params[1:]
    total = float(coeffs.sum())
    if total >= 1.0:
        raise ValueError(f"explosive parameters: coefficient sum {total} >= 1")
    if intercept <= 0:
        raise ValueError("intercept must be positive")
    mean0 = intercept / (1.0 - total)

    rng = np.random.default_rng(seed)
    b = params[1 : 1 + len(spec.past_obs_lags)]
    c = params[1 + len(spec.past_obs_lags) :]
    horizon = burn + n
    y = np.empty(horizon)
    lam = np.empty(horizon)
    for t in range(horizon):
        acc = intercept
        for coef, lag in zip(b, spec.past_obs_lags):
            acc += coef * (y[t - lag] if t - lag >= 0 else mean0)
        for coef, lag in zip(c, spec.past_mean_lags):
            acc += coef * (lam[t - lag] if t - lag >= 0 else mean0)
        if not acc > 0:
            raise ValueError(f"non-positive conditional mean during simulation at t={t}")
        lam[t] = acc
        y[t] = rng.negative_binomial(dispersion, dispersion / (dispersion + acc))
    return y[burn:].astype(np.int64)
