"""Centered Gaussian reference measures, the ellipse map and the pair rotation.

Two covariance representations are supported:

* :class:`DenseCovariance` - a full symmetric positive definite matrix,
  sampled through its Cholesky factor.
* :class:`SpectralCovariance` - a diagonal operator given by its eigenvalues
  in a fixed orthonormal basis.  This is the truncated Karhunen-Loeve form of
  a Gaussian measure on a separable Hilbert space: a state vector holds the
  first ``d`` basis coefficients and the remaining ones are dropped.  Results
  obtained with it describe the truncated measure, not the infinite-
  dimensional one.
"""
from __future__ import annotations

import warnings

import numpy as np

from .circle import as_angle
from .errors import DimensionMismatch, FactorizationFailure

__all__ = [
    "CovarianceSpec", "DenseCovariance", "SpectralCovariance", "power_law",
    "sample_prior", "ellipse_point", "rotate_pair", "CONDITION_CEILING",
]

CONDITION_CEILING = 1e12


class CovarianceSpec:
    """Common interface; use one of the two concrete classes."""

    dim: int

    def sample(self, rng, size=None) -> np.ndarray:
        raise NotImplementedError

    def as_matrix(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def trace(self) -> float:
        return float(np.trace(self.as_matrix()))


class DenseCovariance(CovarianceSpec):
    def __init__(self, matrix):
        c = np.array(matrix, dtype=np.float64)
        if c.ndim == 1:
            k = int(round(np.sqrt(c.size)))
            if k * k != c.size:
                raise DimensionMismatch(f"flat covariance of length {c.size} is not square")
            c = c.reshape(k, k)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise FactorizationFailure("covariance has non-finite entries")
        scale = max(1.0, float(np.abs(c).max()))
        if np.abs(c - c.T).max() > 1e-12 * scale:
            raise FactorizationFailure("covariance matrix is not symmetric")
        try:
            self.cholesky = np.linalg.cholesky(c)
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailure("covariance matrix is not positive definite") from exc
        cond = np.linalg.cond(c)
        if cond > CONDITION_CEILING:
            warnings.warn(f"covariance condition number {cond:.3g} exceeds {CONDITION_CEILING:g}; "
                          "the matrix may be numerically singular", RuntimeWarning, stacklevel=2)
        c.setflags(write=False)
        self.cholesky.setflags(write=False)
        self.matrix = c
        self.dim = c.shape[0]

    def __repr__(self):
        return f"DenseCovariance(dim={self.dim})"

    def sample(self, rng, size=None):
        if size is None:
            return self.cholesky @ rng.standard_normal(self.dim)
        return rng.standard_normal((size, self.dim)) @ self.cholesky.T

    def as_matrix(self):
        return self.matrix


class SpectralCovariance(CovarianceSpec):
    def __init__(self, eigenvalues):
        lam = np.array(eigenvalues, dtype=np.float64).ravel()
        if lam.size == 0:
            raise DimensionMismatch("need at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise FactorizationFailure("eigenvalues must be finite and strictly positive")
        lam.setflags(write=False)
        self.eigenvalues = lam
        self._scale = np.sqrt(lam)
        self.dim = lam.size

    def __repr__(self):
        return f"SpectralCovariance(dim={self.dim})"

    def sample(self, rng, size=None):
        if size is None:
            return self._scale * rng.standard_normal(self.dim)
        return rng.standard_normal((size, self.dim)) * self._scale

    def as_matrix(self):
        return np.diag(self.eigenvalues)

    @property
    def trace(self):
        return float(self.eigenvalues.sum())


def power_law(dim: int, exponent: float) -> SpectralCovariance:
    """Eigenvalues ``i**-exponent`` for ``i = 1..dim`` (trace class for exponent > 1)."""
    if exponent <= 1:
        raise ValueError("exponent must exceed 1 for a trace-class limit")
    return SpectralCovariance(np.arange(1, dim + 1, dtype=np.float64) ** -exponent)


def sample_prior(cov: CovarianceSpec, rng, size=None) -> np.ndarray:
    """Draw from ``N(0, C)``; ``size`` adds a leading batch axis."""
    return cov.sample(rng, size)


def _check_same(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {y.shape} differ")
    return x, y


def ellipse_point(x, w, theta) -> np.ndarray:
    """``cos(theta) x + sin(theta) w``."""
    x, w = _check_same(x, w)
    t = as_angle(theta).value
    return np.cos(t) * x + np.sin(t) * w


def rotate_pair(x, y, theta):
    """``(x cos t + y sin t, x sin t - y cos t)``; an involution for fixed ``t``.

    ``theta`` may be an Angle or radians; for batches pass arrays with a
    leading sample axis.
    """
    x, y = _check_same(x, y)
    t = as_angle(theta).value
    c, s = np.cos(t), np.sin(t)
    return c * x + s * y, s * x - c * y
