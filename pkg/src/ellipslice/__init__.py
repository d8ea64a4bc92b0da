"""Elliptical slice sampling built on an exact shrinkage procedure on the circle.

Modules
-------
circle
    Angles on a fixed-point grid, generalized intervals, arc sets.
shrinkage
    The shrinkage procedure, its unstopped chain and kernel estimates.
gaussian
    Centered Gaussian reference measures, ellipse map and pair rotation.
likelihoods
    Built-in log-likelihoods.
ess
    ESS transitions (two formulations) and the chain driver.
verify
    Seedable statistical checks of the kernel properties.
cli
    Batch front end (``python -m ellipslice``).
"""
from .circle import (TICK, TICKS_PER_TURN, TWO_PI, Angle, ArcSet, GeneralizedInterval, I, Icirc, J,
                     as_angle, contains, length, normalize, reflect, reflect_interval, sample_uniform)
from .errors import (ConfigError, DimensionMismatch, EllipSliceError, FactorizationFailure,
                     PreconditionViolated, ZeroLengthInterval)
from .ess import (ChainResult, EssStepRecord, TargetModel, ess_step, ess_step_batch, ess_step_murray,
                  make_slice_oracle, run_chain)
from .gaussian import (CovarianceSpec, DenseCovariance, SpectralCovariance, ellipse_point, power_law,
                       rotate_pair, sample_prior)
from .likelihoods import (CATALOG, Constant, GaussianLikelihood, GPRegression, IndicatorCube, Mixture,
                          make_likelihood)
from .rng import RngStream
from .shrinkage import (DEFAULT_CAP, ShrinkOutcome, ShrinkTriple, SliceOracle, estimate_Q, shrink,
                        shrink_batch, shrink_step, unstopped_run)

__version__ = "0.1.0"
