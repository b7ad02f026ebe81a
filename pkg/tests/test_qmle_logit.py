import math

import numpy as np
import pytest

from estimators.qmle_logit import (
    LogitConfig,
    logit_fit,
    logit_gradient,
    logit_hessian,
    logit_loglik,
)
from models.errors import InvalidConfigError, MissingClassError
from models.model_core import Dataset, RngSeed, Theta, rescaled_slope
from simulation.mc_harness import DgpSpec, generate_sample


@pytest.fixture
def overlapping(make_dataset):
    return make_dataset(np.random.default_rng(17), 200, 2, positive_share=0.45)


class TestLoglik:
    def test_zero_parameter(self, six_point):
        assert logit_loglik(Theta.zeros(2), six_point) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_increases_toward_zero_on_separable_data(self, two_point):
        values = [logit_loglik(Theta(0.0, [b]), two_point) for b in (1.0, 5.0, 20.0, 100.0)]
        assert np.all(np.diff(values) > 0)
        assert -1e-40 < values[-1] < 0.0

    def test_symmetric_intercept_only(self):
        data = Dataset(labels=[1.0, -1.0], covariates=[[0.0], [0.0]])
        alphas = np.linspace(-2, 2, 41)
        values = [logit_loglik(Theta(a, [0.3]), data) for a in alphas]
        assert alphas[int(np.argmax(values))] == pytest.approx(0.0, abs=1e-12)
        assert max(values) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_no_overflow_for_huge_margins(self, two_point):
        assert np.isfinite(logit_loglik(Theta(0.0, [-1e6]), two_point))


class TestDerivatives:
    def test_gradient_matches_central_differences(self, overlapping):
        rng = np.random.default_rng(1)
        for _ in range(20):
            theta = Theta(rng.normal(scale=0.5), rng.normal(scale=0.5, size=2))
            analytic = logit_gradient(theta, overlapping)
            numeric = np.empty(3)
            h = 1e-6
            for k in range(3):
                e = np.zeros(3)
                e[k] = h
                up = logit_loglik(Theta.from_vector(theta.as_vector() + e), overlapping)
                down = logit_loglik(Theta.from_vector(theta.as_vector() - e), overlapping)
                numeric[k] = (up - down) / (2 * h)
            np.testing.assert_allclose(numeric, analytic, rtol=1e-6, atol=1e-9)

    def test_hessian_is_negative_semidefinite(self, overlapping):
        rng = np.random.default_rng(2)
        for _ in range(20):
            theta = Theta(rng.normal(scale=2), rng.normal(scale=2, size=2))
            assert np.linalg.eigvalsh(logit_hessian(theta, overlapping)).max() <= 1e-10


class TestLogitFit:
    def test_uninformative_covariate(self):
        data = Dataset(labels=[1.0, -1.0, 1.0, -1.0], covariates=[[1.0], [-1.0], [-1.0], [1.0]])
        fit = logit_fit(data)
        assert fit.converged
        np.testing.assert_allclose(fit.theta.as_vector(), [0.0, 0.0], atol=1e-12)

    def test_separable_pair_is_flagged(self, two_point):
        fit = logit_fit(two_point)
        assert not fit.converged
        assert fit.separated

    def test_missing_class(self):
        data = Dataset(labels=[-1.0, -1.0], covariates=[[0.0], [1.0]])
        with pytest.raises(MissingClassError):
            logit_fit(data)

    def test_converged_fit_has_small_gradient(self, overlapping):
        config = LogitConfig()
        fit = logit_fit(overlapping, config)
        assert fit.converged and not fit.separated
        assert fit.gradient_norm <= config.tol
        assert np.max(np.abs(logit_gradient(fit.theta, overlapping))) <= config.tol

    def test_column_scaling_equivariance(self, overlapping):
        c = -3.0
        scaled = overlapping.with_covariates(overlapping.covariates * np.array([1.0, c]))
        base = logit_fit(overlapping)
        other = logit_fit(scaled)
        assert other.theta.beta[1] == pytest.approx(base.theta.beta[1] / c, abs=1e-8)
        assert other.theta.beta[0] == pytest.approx(base.theta.beta[0], abs=1e-8)

    def test_iterates_do_not_decrease_loglik(self, overlapping):
        previous = -np.inf
        for cap in range(1, 8):
            fit = logit_fit(overlapping, LogitConfig(max_iter=cap))
            assert fit.loglik >= previous - 1e-15
            previous = fit.loglik

    def test_rejects_bad_config(self):
        with pytest.raises(InvalidConfigError):
            LogitConfig(tol=0.0)

    @pytest.mark.slow
    def test_slope_ratio_consistency(self):
        ratios = []
        for stream in range(5):
            fit = logit_fit(generate_sample(DgpSpec.table1(0.0, 5000), RngSeed(2024, stream)))
            assert fit.converged
            ratios.append(rescaled_slope(fit.theta, 0, 1))
        assert abs(np.mean(ratios) - 1.0) < 0.05
