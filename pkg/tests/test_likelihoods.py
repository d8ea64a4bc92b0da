import math

import numpy as np
import pytest
from scipy import stats

from ellipslice.errors import ConfigError, DimensionMismatch
from ellipslice.gaussian import DenseCovariance, SpectralCovariance, power_law
from ellipslice.likelihoods import (
    CATALOG, Constant, GaussianLikelihood, GPRegression, IndicatorCube, LinearGaussian, Mixture, make_likelihood,
)


def test_constant_batches():
    f = Constant(2.5)
    assert f(np.zeros(3)) == 2.5
    assert f(np.zeros((4, 3))).shape == (4,)


def test_gaussian_value():
    f = GaussianLikelihood([1.0, -1.0], sigma=0.5, dim=3)
    x = np.array([0.0, 0.0, 7.0])
    assert f(x) == pytest.approx(-0.5 * (4.0 + 4.0))


def test_gaussian_dimension_checks():
    with pytest.raises(DimensionMismatch):
        GaussianLikelihood([1.0, 2.0, 3.0], dim=2)
    with pytest.raises(DimensionMismatch):
        GaussianLikelihood([1.0])(np.zeros(2))


def test_conjugate_1d_posterior():
    # prior N(0, 1), observation 1 with unit noise: N(m / (1 + s2), s2 / (1 + s2)) with m = s2 = 1
    mean, cov = GaussianLikelihood([1.0], 1.0).posterior(SpectralCovariance([1.0]))
    assert mean[0] == pytest.approx(0.5)
    assert cov[0, 0] == pytest.approx(0.5)


def test_posterior_against_joint_gaussian_conditioning():
    # condition the joint Gaussian of (x, y = A x + noise) on y: an independent route
    rng = np.random.default_rng(3)
    A = rng.normal(size=(2, 4))
    y = np.array([0.7, -1.2])
    sig = np.array([0.3, 0.6])
    C = power_law(4, 2.0).as_matrix()
    S = A @ C @ A.T + np.diag(sig ** 2)
    K = C @ A.T @ np.linalg.inv(S)
    mean_ref, cov_ref = K @ y, C - K @ A @ C
    for prior in (power_law(4, 2.0), DenseCovariance(C)):
        mean, cov = LinearGaussian(A, y, sig).posterior(prior)
        np.testing.assert_allclose(mean, mean_ref, atol=1e-12)
        np.testing.assert_allclose(cov, cov_ref, atol=1e-12)


def test_posterior_sampler_moments(rng):
    lik = GaussianLikelihood([1.0], 1.0)
    draws = lik.posterior_sampler(SpectralCovariance([1.0]))(rng, 10**5)
    assert abs(draws.mean() - 0.5) < 4 * math.sqrt(0.5 / 1e5)
    assert abs(draws.var() - 0.5) < 0.01


class TestIndicatorCube:
    f = IndicatorCube(0.1)

    def test_values(self):
        assert self.f(np.array([0.5, 0.5])) == pytest.approx(math.log(1.1))
        assert self.f(np.array([0.0, 1.0])) == pytest.approx(math.log(1.1))  # closed cube
        assert self.f(np.array([-1e-12, 0.5])) == pytest.approx(math.log(0.1))

    def test_positive_epsilon(self):
        with pytest.raises(ValueError):
            IndicatorCube(0.0)


class TestMixture:
    def test_matches_scipy_density(self, rng):
        w = [0.2, 0.8]
        mu = [[1.0, 0.0], [-1.0, 2.0]]
        s = [0.5, 1.5]
        f = Mixture(w, mu, s)
        x = rng.normal(size=(50, 3))
        ref = np.log(sum(wk * stats.multivariate_normal(mk, sk ** 2 * np.eye(2)).pdf(x[:, :2])
                         for wk, mk, sk in zip(w, mu, s)))
        np.testing.assert_allclose(f(x), ref, rtol=1e-10)

    def test_far_away_is_finite(self):
        f = Mixture([1.0, 1.0], [[0.0], [1.0]], [0.01, 0.01])
        assert np.isfinite(f(np.array([50.0])))

    def test_shapes_checked(self):
        with pytest.raises(DimensionMismatch):
            Mixture([1.0], [[0.0], [1.0]], [1.0])


def test_gp_regression_design():
    f = GPRegression([[0.25, 1.0], [0.5, -0.5]], noise=0.1, dim=3)
    np.testing.assert_allclose(f.design[1], np.sqrt(2) * np.sin(np.pi * 0.5 * np.array([1, 2, 3])))
    x = np.array([0.2, -0.1, 0.4])
    np.testing.assert_allclose(f.function_values(x, [0.25, 0.5]), f.design @ x)


class TestCatalog:
    def test_names(self):
        assert set(CATALOG) == {"constant", "gaussian", "indicator_cube", "mixture", "gp_regression"}

    def test_build_each(self):
        assert make_likelihood("constant", 2)(np.zeros(2)) == 0.0
        assert make_likelihood("gaussian", 2, mean=[1.0], sigma=2.0).dim == 2
        assert make_likelihood("indicator_cube", 2, epsilon=0.1).epsilon == 0.1
        make_likelihood("mixture", 2, weights=[1.0], means=[[0.0, 0.0]], sigmas=[1.0])
        assert make_likelihood("gp_regression", 5, observations=[[0.1, 0.2]], noise=0.1).dim == 5

    def test_unknown(self):
        with pytest.raises(ConfigError, match="unknown likelihood"):
            make_likelihood("nope", 2)

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            make_likelihood("indicator_cube", 2, eps=0.1)
        with pytest.raises(ConfigError):
            make_likelihood("gaussian", 2)
