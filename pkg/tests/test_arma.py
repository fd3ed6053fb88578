import numpy as np
import pytest
from scipy.stats import kstest

from wwmonitor import ArmaModel, arma_residuals, fit_arma_css, ljung_box_test, simulate_arma
from wwmonitor.arma import ConvergenceError, acf, css_objective


class TestFit:
    def test_ar1_recovery(self):
        true = ArmaModel(1, 0, 0, (0.6,), (), 0.0, 1.0)
        fit = fit_arma_css(simulate_arma(true, 2000, seed=42), 1, 0, 0)
        assert fit.ar_coeffs[0] == pytest.approx(0.6, abs=0.05)

    def test_white_noise_ar_near_zero(self):
        rng = np.random.default_rng(19)
        fit = fit_arma_css(rng.normal(0, 1, 2000), 1, 0, 0)
        assert fit.ar_coeffs[0] == pytest.approx(0.0, abs=0.05)

    def test_mean_only_model_intercept_is_sample_mean(self):
        rng = np.random.default_rng(4)
        y = rng.normal(3.7, 2.0, 500)
        fit = fit_arma_css(y, 0, 0, 0)
        assert fit.intercept == pytest.approx(y.mean(), abs=1e-6)

    def test_ma_recovery(self):
        true = ArmaModel(0, 0, 1, (), (0.7,), 0.0, 1.0)
        fit = fit_arma_css(simulate_arma(true, 4000, seed=8), 0, 0, 1)
        assert fit.ma_coeffs[0] == pytest.approx(0.7, abs=0.06)

    def test_fitted_model_is_stationary(self):
        # a near-unit-root generator keeps the barrier honest
        true = ArmaModel(1, 0, 0, (0.97,), (), 0.0, 1.0)
        fit = fit_arma_css(simulate_arma(true, 1500, seed=3), 1, 0, 0)
        assert fit.is_stationary()

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            fit_arma_css(np.arange(15.0), 1, 0, 1)

    def test_constant_series_rejected(self):
        with pytest.raises(ConvergenceError):
            fit_arma_css(np.full(200, 3.0), 1, 0, 0)

    def test_css_at_fit_beats_truth_on_average(self):
        true = ArmaModel(1, 0, 0, (0.5,), (), 1.0, 1.0)
        diffs = []
        for seed in range(10):
            y = simulate_arma(true, 400, seed=seed)
            fit = fit_arma_css(y, 1, 0, 0)
            at_fit = css_objective(y, 1, 0, 0, fit.intercept, fit.ar_coeffs, fit.ma_coeffs)
            at_truth = css_objective(y, 1, 0, 0, true.intercept, true.ar_coeffs, true.ma_coeffs)
            diffs.append(at_truth - at_fit)
            assert at_fit <= at_truth + 1e-6  # the optimizer minimizes over a set containing the truth
        assert np.mean(diffs) >= 0

    def test_differencing_equivalence(self):
        # fitting (p,1,q) on y is the same CSS problem as (p,0,q) on diff(y)
        true = ArmaModel(1, 0, 1, (0.4,), (0.3,), 0.2, 1.0)
        y = np.cumsum(simulate_arma(true, 800, seed=21))
        direct = fit_arma_css(np.diff(y), 1, 0, 1)
        integrated = fit_arma_css(y, 1, 1, 1)
        assert integrated.ar_coeffs == direct.ar_coeffs
        assert integrated.ma_coeffs == direct.ma_coeffs
        assert integrated.intercept == direct.intercept
        assert integrated.innovation_sd == direct.innovation_sd


class TestResiduals:
    def test_fitting_residuals_center_on_zero(self):
        true = ArmaModel(1, 0, 0, (0.6,), (), 5.0, 1.0)
        y = simulate_arma(true, 1500, seed=2)
        fit = fit_arma_css(y, 1, 0, 0)
        r = arma_residuals(fit, y)
        r = r[~np.isnan(r)]
        assert abs(r.mean()) < 2 * r.std() / np.sqrt(r.size)

    def test_mean_only_residuals(self):
        rng = np.random.default_rng(6)
        y = rng.normal(10, 1, 300)
        fit = fit_arma_css(y, 0, 0, 0)
        r = arma_residuals(fit, y)
        np.testing.assert_allclose(r, y - fit.intercept)

    def test_burn_in_flagging(self):
        model = ArmaModel(1, 0, 3, (0.5,), (0.1, 0.1, 0.1), 0.0, 1.0)
        r = arma_residuals(model, np.arange(50.0))
        assert np.isnan(r[:3]).all() and not np.isnan(r[3:]).any()

    def test_true_model_residuals_pass_ljung_box(self):
        true = ArmaModel(1, 0, 0, (0.6,), (), 0.0, 1.0)
        y = simulate_arma(true, 2000, seed=13)
        r = arma_residuals(true, y)
        r = r[~np.isnan(r)]
        assert ljung_box_test(r, 10) > 0.01


class TestLjungBox:
    def test_strong_ar1_rejected(self):
        true = ArmaModel(1, 0, 0, (0.9,), (), 0.0, 1.0)
        y = simulate_arma(true, 500, seed=1)
        assert ljung_box_test(y, 10) < 0.001

    def test_iid_pvalues_uniform_over_seeds(self):
        pvals = []
        for seed in range(200):
            rng = np.random.default_rng(seed)
            pvals.append(ljung_box_test(rng.normal(size=500), 10))
        assert kstest(pvals, "uniform").pvalue > 0.01

    def test_lags_bound(self):
        with pytest.raises(ValueError):
            ljung_box_test(np.arange(20.0), 10)

    def test_constant_series(self):
        with pytest.raises(ValueError):
            ljung_box_test(np.full(100, 2.0), 5)


class TestSimulate:
    def test_ar1_autocorrelation(self):
        true = ArmaModel(1, 0, 0, (0.5,), (), 0.0, 1.0)
        y = simulate_arma(true, 5000, seed=77)
        assert acf(y, 1)[1] == pytest.approx(0.5, abs=0.05)

    def test_no_coefficients_is_noise(self):
        true = ArmaModel(0, 0, 0, (), (), 2.0, 3.0)
        y = simulate_arma(true, 20000, seed=5)
        assert y.mean() == pytest.approx(2.0, abs=0.1)
        assert y.std() == pytest.approx(3.0, rel=0.05)

    def test_seed_determinism(self):
        true = ArmaModel(2, 0, 1, (0.4, -0.2), (0.3,), 1.0, 1.5)
        a = simulate_arma(true, 300, seed=123)
        b = simulate_arma(true, 300, seed=123)
        np.testing.assert_array_equal(a, b)

    def test_nonstationary_rejected(self):
        bad = ArmaModel(1, 0, 0, (1.05,), (), 0.0, 1.0)
        with pytest.raises(ValueError):
            simulate_arma(bad, 100, seed=0)
