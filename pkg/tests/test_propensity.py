import numpy as np
import pytest

from pacs import (
    Dataset,
    SeparationError,
    fit_logistic,
    fit_logistic_matrix,
    predict_propensity,
    sigmoid,
)
from pacs.propensity import log_likelihood, score

from oracles import golden_section_logistic


class TestInterceptOnly:
    def test_balanced_treatment_gives_zero(self):
        d = np.array([1.0, 0.0] * 8)
        fit = fit_logistic_matrix(np.empty((16, 0)), d, include_intercept=True)
        assert fit.converged
        assert abs(fit.alpha_hat[0]) < 1e-10  # logit(0.5) = 0
        assert np.allclose(fit.p_hat, 0.5)

    def test_unbalanced_matches_logit_of_mean(self):
        d = np.array([1.0] * 6 + [0.0] * 2)
        fit = fit_logistic_matrix(np.empty((8, 0)), d, include_intercept=True)
        assert fit.alpha_hat[0] == pytest.approx(np.log(0.75 / 0.25), abs=1e-8)


class TestGoldenSectionOracle:
    def test_1d_mle_matches_golden_section(self):
        x = np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
        d = np.array([0.0, 0.0, 1.0, 0.0, 1.0, 1.0])
        ds = Dataset(y=np.zeros(6), d=d, x=x[:, None], names=("x1",))
        fit = fit_logistic(ds)
        oracle = golden_section_logistic(x, d)
        assert fit.converged
        assert fit.alpha_hat[0] == pytest.approx(oracle, abs=1e-6)


class TestNullModel:
    def test_independent_treatment_small_coefficients(self):
        rng = np.random.default_rng(20240)
        n, p = 10_000, 4
        x = rng.standard_normal((n, p))
        d = (rng.random(n) < 0.5).astype(float)
        fit = fit_logistic_matrix(x, d)
        assert fit.converged
        assert np.max(np.abs(fit.alpha_hat)) <= 0.1


class TestScore:
    def test_score_vanishes_at_convergence(self):
        rng = np.random.default_rng(3)
        n, p = 400, 3
        x = rng.standard_normal((n, p))
        d = (rng.random(n) < sigmoid(x @ np.array([0.5, -0.3, 0.0]))).astype(float)
        fit = fit_logistic_matrix(x, d)
        assert fit.converged
        g = score(x, d, fit.alpha_hat)
        assert np.max(np.abs(g)) <= 1e-8 * n

    def test_analytic_score_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        n, p = 60, 3
        for _ in range(100):
            x = rng.standard_normal((n, p))
            d = (rng.random(n) < 0.5).astype(float)
            alpha = rng.uniform(-1.5, 1.5, size=p)
            g = score(x, d, alpha)
            fd = np.empty(p)
            for j in range(p):
                h = 1e-5 * (1.0 + abs(alpha[j]))
                up, dn = alpha.copy(), alpha.copy()
                up[j] += h
                dn[j] -= h
                fd[j] = (log_likelihood(x, d, up) - log_likelihood(x, d, dn)) / (2 * h)
            denom = np.maximum(np.abs(g), 1e-3)
            assert np.max(np.abs(g - fd) / denom) <= 1e-5


class TestMonotoneLikelihood:
    def test_ll_path_non_decreasing(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n, p = 80, 4
            x = rng.standard_normal((n, p))
            d = (rng.random(n) < sigmoid(x @ rng.uniform(-1, 1, p))).astype(float)
            fit = fit_logistic_matrix(x, d)
            path = np.array(fit.ll_path)
            assert np.all(np.diff(path) >= -1e-12)


class TestSeparation:
    def test_separated_data_raises(self):
        x = np.linspace(-2, 2, 30)
        d = (x > 0).astype(float)  # perfectly separated
        with pytest.raises(SeparationError):
            fit_logistic_matrix(x[:, None], d, max_iter=100)


class TestClippingAndPredict:
    def test_p_hat_clipped(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((200, 1)) * 8.0
        d = (rng.random(200) < sigmoid(2.0 * x[:, 0])).astype(float)
        try:
            fit = fit_logistic_matrix(x, d, clip_eps=1e-3)
        except SeparationError:
            pytest.skip("draw happened to be separated")
        assert fit.p_hat.min() >= 1e-3
        assert fit.p_hat.max() <= 1 - 1e-3

    def test_zero_coefficients_give_half(self):
        fit = fit_logistic_matrix(np.zeros((10, 2)),
                                  np.array([1.0, 0.0] * 5))
        assert predict_propensity(fit, np.array([3.0, -4.0])) == pytest.approx(0.5)

    def test_weak_confounder_coefficient_value(self):
        alpha = np.zeros(8)
        alpha[0] = 0.4
        fit = fit_logistic_matrix(np.zeros((10, 8)), np.array([1.0, 0.0] * 5))
        fit = type(fit)(alpha_hat=alpha, include_intercept=False,
                        p_hat=fit.p_hat, converged=True, iterations=0,
                        log_likelihood=0.0)
        e1 = np.zeros(8)
        e1[0] = 1.0
        assert predict_propensity(fit, e1) == pytest.approx(0.598688, abs=1e-6)

    def test_dimension_mismatch(self):
        fit = fit_logistic_matrix(np.zeros((10, 2)), np.array([1.0, 0.0] * 5))
        with pytest.raises(ValueError, match="entries"):
            predict_propensity(fit, np.ones(3))


class TestPreconditions:
    def test_needs_more_rows_than_coefficients(self):
        with pytest.raises(ValueError, match="n > number"):
            fit_logistic_matrix(np.ones((3, 3)), np.array([1.0, 0.0, 1.0]))

    def test_dataset_level_guard(self, tiny_dataset):
        fit = fit_logistic(tiny_dataset)
        assert fit.p_hat.shape == (4,)
