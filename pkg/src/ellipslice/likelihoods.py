"""Built-in log-likelihoods, selectable by name.

Each likelihood is a callable mapping states of shape ``(..., d)`` to log
values of shape ``(...)``, so the same object serves single states and
batches.  Only log-likelihoods are ever used; normalizing constants of the
posterior are never needed.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .gaussian import CovarianceSpec, DenseCovariance, SpectralCovariance

__all__ = [
    "Constant", "GaussianLikelihood", "IndicatorCube", "Mixture", "GPRegression",
    "LinearGaussian", "CATALOG", "make_likelihood",
]


class Constant:
    name = "constant"

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.full(x.shape[:-1], self.value)


class LinearGaussian:
    """``log rho(x) = -0.5 * sum(((y - A x) / sigma)**2)``.

    A Gaussian prior is conjugate to this likelihood, which makes exact
    posterior sampling available through :meth:`posterior`.
    """

    def __init__(self, design, observations, sigma):
        self.design = np.atleast_2d(np.asarray(design, dtype=np.float64))
        self.observations = np.asarray(observations, dtype=np.float64).ravel()
        self.sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), self.observations.shape).copy()
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")
        if self.design.shape[0] != self.observations.size:
            raise DimensionMismatch("design rows must match the number of observations")

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"state has dimension {x.shape[-1]}, expected {self.dim}")
        r = (self.observations - x @ self.design.T) / self.sigma
        return -0.5 * np.sum(r * r, axis=-1)

    def posterior(self, prior: CovarianceSpec):
        """Mean and covariance of the posterior under prior ``N(0, C)``."""
        if prior.dim != self.dim:
            raise DimensionMismatch(f"prior dimension {prior.dim} != likelihood dimension {self.dim}")
        a = self.design / self.sigma[:, None]
        b = self.observations / self.sigma
        if isinstance(prior, SpectralCovariance):
            prec_prior = np.diag(1.0 / prior.eigenvalues)
        else:
            prec_prior = np.linalg.inv(prior.as_matrix())
        prec = prec_prior + a.T @ a
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        return cov @ (a.T @ b), cov

    def posterior_sampler(self, prior: CovarianceSpec):
        """Function ``(rng, n) -> (n, d)`` array of exact posterior draws."""
        mean, cov = self.posterior(prior)
        chol = DenseCovariance(cov).cholesky

        def draw(rng, n):
            return mean + rng.standard_normal((n, mean.size)) @ chol.T

        return draw


class GaussianLikelihood(LinearGaussian):
    """Independent Gaussian observations of the first ``len(mean)`` coordinates."""

    name = "gaussian"

    def __init__(self, mean, sigma=1.0, dim=None):
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        k = mean.size
        dim = k if dim is None else int(dim)
        if k > dim:
            raise DimensionMismatch(f"{k} observed coordinates exceed dimension {dim}")
        design = np.eye(k, dim)
        super().__init__(design, mean, sigma)
        self.mean = mean


class IndicatorCube:
    """``rho(x) = 1[x in [0,1]^d] + epsilon``: level sets above ``epsilon`` are closed."""

    name = "indicator_cube"

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self._inside = np.log1p(self.epsilon)
        self._outside = np.log(self.epsilon)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=-1)
        return np.where(inside, self._inside, self._outside)


class Mixture:
    """Mixture of isotropic Gaussian bumps on the first ``k`` coordinates.

    ``means`` has shape ``(components, k)``; ``sigmas`` one entry per
    component.
    """

    name = "mixture"

    def __init__(self, weights, means, sigmas):
        w = np.asarray(weights, dtype=np.float64).ravel()
        mu = np.atleast_2d(np.asarray(means, dtype=np.float64))
        s = np.broadcast_to(np.asarray(sigmas, dtype=np.float64), w.shape).copy()
        if mu.shape[0] != w.size:
            raise DimensionMismatch("one mean vector per mixture weight is required")
        if np.any(w <= 0) or np.any(s <= 0):
            raise ValueError("weights and sigmas must be positive")
        self.weights, self.means, self.sigmas = w / w.sum(), mu, s
        k = mu.shape[1]
        self._logc = np.log(self.weights) - k * np.log(s) - 0.5 * k * np.log(2 * np.pi)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        k = self.means.shape[1]
        diff = x[..., None, :k] - self.means
        a = self._logc - 0.5 * np.sum(diff * diff, axis=-1) / self.sigmas ** 2
        # log-sum-exp over components; the max shift keeps exp from underflowing
        top = a.max(axis=-1)
        return top + np.log(np.exp(a - top[..., None]).sum(axis=-1))


class GPRegression(LinearGaussian):
    """Regression on [0, 1] with ``f(s) = sum_i x_i sqrt(2) sin(i pi s)``.

    The state holds the first ``dim`` coefficients of ``f`` in the sine
    basis; with a spectral prior this is a truncated Karhunen-Loeve
    expansion of a Gaussian process prior.
    """

    name = "gp_regression"

    def __init__(self, observations, noise, dim):
        obs = np.atleast_2d(np.asarray(observations, dtype=np.float64))
        if obs.shape[1] != 2:
            raise ValueError("observations must be (location, value) pairs")
        self.locations = obs[:, 0]
        design = self.basis(self.locations, dim)
        super().__init__(design, obs[:, 1], noise)

    @staticmethod
    def basis(s, dim):
        i = np.arange(1, dim + 1)
        return np.sqrt(2.0) * np.sin(np.pi * np.outer(np.asarray(s, dtype=np.float64), i))

    def function_values(self, x, s):
        return np.asarray(x) @ self.basis(s, self.dim).T


CATALOG = {
    "constant": Constant,
    "gaussian": GaussianLikelihood,
    "indicator_cube": IndicatorCube,
    "mixture": Mixture,
    "gp_regression": GPRegression,
}


def make_likelihood(name: str, dim: int, **params):
    """Build a catalog likelihood from its name and parameters."""
    try:
        cls = CATALOG[name]
    except KeyError:
        raise ConfigError(f"unknown likelihood {name!r}; choose from {sorted(CATALOG)}",
                          field="likelihood.name") from None
    try:
        if cls is GaussianLikelihood:
            return cls(params.pop("mean"), params.pop("sigma", 1.0), dim=dim, **params)
        if cls is GPRegression:
            return cls(params.pop("observations"), params.pop("noise"), dim=dim, **params)
        return cls(**params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for likelihood {name!r}: {exc}",
                          field="likelihood") from None
