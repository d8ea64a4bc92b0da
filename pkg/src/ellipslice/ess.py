"""Elliptical slice sampling transitions and the chain driver.

Two transition implementations are provided:

* :func:`ess_step` draws a threshold and an auxiliary prior sample, then
  delegates the angle search to :func:`ellipslice.shrinkage.shrink` with
  anchor 0 on the set of angles whose ellipse point clears the threshold.
* :func:`ess_step_murray` is the classic formulation with a signed bracket
  ``[gamma - 2pi, gamma]`` that is cut on either side of 0.

Both consume random variates in the same order (threshold uniform, prior
normals, then one uniform per angle draw), so given the same generator state
they produce the same transition.

Thresholds are kept in log space: ``log t = log rho(x) + log U``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .circle import TICK, TICKS_PER_TURN, TWO_PI, Angle
from .errors import DimensionMismatch
from .gaussian import CovarianceSpec, ellipse_point, sample_prior
from .rng import RngStream
from .shrinkage import DEFAULT_CAP, SliceOracle, shrink, shrink_batch

__all__ = [
    "TargetModel", "EssStepRecord", "make_slice_oracle", "ess_step", "ess_step_murray",
    "ChainResult", "run_chain", "ess_step_batch", "VARIANTS",
]

VARIANTS = ("reformulated", "murray")


@dataclass(frozen=True)
class TargetModel:
    """Posterior proportional to ``exp(log_likelihood(x)) N(0, C)(dx)``.

    ``log_likelihood`` must return a finite value for every finite state and
    accept batches of shape ``(n, dim)``.
    """

    log_likelihood: Callable[[np.ndarray], np.ndarray]
    prior: CovarianceSpec
    dim: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if self.dim is None:
            object.__setattr__(self, "dim", self.prior.dim)
        elif self.dim != self.prior.dim:
            raise DimensionMismatch(f"model dimension {self.dim} != prior dimension {self.prior.dim}")

    @property
    def has_exact_posterior(self) -> bool:
        return hasattr(self.log_likelihood, "posterior_sampler")

    def posterior_sampler(self):
        """Exact posterior sampler ``(rng, n) -> (n, dim)`` for conjugate models."""
        if not self.has_exact_posterior:
            raise TypeError(f"no exact posterior sampler for likelihood {self.name or self.log_likelihood!r}")
        return self.log_likelihood.posterior_sampler(self.prior)

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"state has shape {x.shape}, expected ({self.dim},)")
        return x


@dataclass(frozen=True)
class EssStepRecord:
    x_out: np.ndarray
    shrink_iterations: int
    likelihood_evals: int
    cap_hit: bool
    angle: Optional[float] = None       # accepted angle in radians
    log_lik_out: Optional[float] = None
    collapsed: bool = False


def make_slice_oracle(model: TargetModel, x, w, log_t: float) -> SliceOracle:
    """Oracle for ``{theta : log_likelihood(cos(theta) x + sin(theta) w) > log_t}``.

    The most recent evaluation is kept in ``oracle.last`` as
    ``(angle, log_likelihood)`` so callers can reuse the accepted value.
    """
    last = {}

    def member(theta: Angle) -> bool:
        ll = float(model.log_likelihood(ellipse_point(x, w, theta)))
        last["value"] = (theta, ll)
        return ll > log_t

    oracle = SliceOracle(member, f"ellipse slice at log t = {log_t:.6g}")
    oracle.last = last
    return oracle


def _threshold(ll_in: float, u: float) -> float:
    with np.errstate(divide="ignore"):
        return ll_in + float(np.log(u))


def ess_step(model: TargetModel, x_in, rng, cap: int = DEFAULT_CAP, *,
             log_lik_in: Optional[float] = None, fallback_to_anchor: bool = False,
             fault: Optional[str] = None) -> EssStepRecord:
    """One elliptical slice sampling transition (shrinkage form).

    On a cap hit (or a bracket collapsing onto the anchor) the state is
    returned unchanged and ``cap_hit`` is set.  ``fault`` is passed on to
    :func:`ellipslice.shrinkage.shrink` for negative-control runs.
    """
    x_in = model.check_state(x_in)
    evals = 0
    if log_lik_in is None:
        log_lik_in = float(model.log_likelihood(x_in))
        evals += 1
    log_t = _threshold(log_lik_in, rng.random())
    w = sample_prior(model.prior, rng)
    oracle = make_slice_oracle(model, x_in, w, log_t)
    # 0 is in the slice by construction (log U < 0), so the anchor check is skipped
    out = shrink(Angle(0), oracle, rng, cap, fallback_to_anchor=fallback_to_anchor,
                 fault=fault, check_anchor=False)
    evals += out.evals
    if out.cap_exceeded or out.fallback:
        return EssStepRecord(x_in.copy(), out.iterations, evals, out.cap_exceeded,
                             0.0 if out.fallback else None, log_lik_in, out.collapsed)
    _, ll = oracle.last["value"]
    return EssStepRecord(ellipse_point(x_in, w, out.angle), out.iterations, evals, False,
                         out.angle.value, ll)


def ess_step_murray(model: TargetModel, x_in, rng, cap: int = DEFAULT_CAP, *,
                    log_lik_in: Optional[float] = None) -> EssStepRecord:
    """One transition with the signed-bracket formulation.

    The bracket starts at ``[gamma - 2pi, gamma]`` with ``gamma`` on the tick
    grid; later angles are plain floats.  A rejected negative angle
    raises the lower end, a rejected non-negative one lowers the upper end.
    Angles are only mapped to ``[0, 2pi)`` in the returned record.  A bracket
    narrower than one tick of the circle grid counts as collapsed.
    """
    x_in = model.check_state(x_in)
    evals = 0
    if log_lik_in is None:
        log_lik_in = float(model.log_likelihood(x_in))
        evals += 1
    log_t = _threshold(log_lik_in, rng.random())
    w = sample_prior(model.prior, rng)
    # the first angle sits on the circle grid (tick 0, the current state, is
    # skipped) so a first-draw acceptance matches the other form bit for bit
    n = TICKS_PER_TURN - 1
    gamma = (min(int(rng.random() * n), n - 1) + 1) * TICK
    gmin, gmax = gamma - TWO_PI, gamma
    iterations = 1
    while True:
        x_prop = np.cos(gamma) * x_in + np.sin(gamma) * w
        ll = float(model.log_likelihood(x_prop))
        evals += 1
        if ll > log_t:
            return EssStepRecord(x_prop, iterations, evals, False, gamma % TWO_PI, ll)
        if iterations >= cap:
            break
        if gamma < 0:
            gmin = gamma
        else:
            gmax = gamma
        if gmax - gmin <= TICK:
            return EssStepRecord(x_in.copy(), iterations, evals, True, None, log_lik_in, True)
        gamma = gmin + rng.random() * (gmax - gmin)
        iterations += 1
    return EssStepRecord(x_in.copy(), iterations, evals, True, None, log_lik_in)


@dataclass(eq=False)
class ChainResult:
    samples: np.ndarray            # (n_steps, dim), state after each step
    shrink_iterations: np.ndarray  # (n_steps,)
    likelihood_evals: np.ndarray   # (n_steps,)
    cap_hit: np.ndarray            # (n_steps,) bool
    initial_evals: int = 1
    wall_time: float = 0.0

    @property
    def n_steps(self) -> int:
        return self.samples.shape[0]

    @property
    def mean_shrink_iterations(self) -> float:
        return float(self.shrink_iterations.mean())

    @property
    def total_likelihood_evals(self) -> int:
        return int(self.likelihood_evals.sum()) + self.initial_evals

    @property
    def cap_hits(self) -> int:
        return int(self.cap_hit.sum())

    def summary(self, burn_in: int = 0) -> dict:
        kept = self.samples[burn_in:]
        return {
            "n_steps": self.n_steps,
            "burn_in": burn_in,
            "mean": kept.mean(axis=0).tolist(),
            "variance": kept.var(axis=0, ddof=1).tolist() if len(kept) > 1 else [0.0] * kept.shape[1],
            "mean_shrink_iters": self.mean_shrink_iterations,
            "mean_llh_evals_per_step": float(self.likelihood_evals.mean()),
            "total_llh_evals": self.total_likelihood_evals,
            "cap_hits": self.cap_hits,
        }


def run_chain(model: TargetModel, x0, n_steps: int, rng, cap: int = DEFAULT_CAP,
              variant: str = "reformulated") -> ChainResult:
    """Iterate a transition ``n_steps`` times.

    ``rng`` is an :class:`RngStream` or an integer seed; step ``i`` draws
    from ``rng.at_step(i)``, so a chain is reproducible bit for bit and the
    two variants see identical variates at every step.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    step = ess_step if variant == "reformulated" else ess_step_murray
    x = model.check_state(x0).copy()
    ll = float(model.log_likelihood(x))
    samples = np.empty((n_steps, model.dim))
    iters = np.empty(n_steps, dtype=np.int64)
    evals = np.empty(n_steps, dtype=np.int64)
    caps = np.zeros(n_steps, dtype=bool)
    start = time.perf_counter()
    for i in range(n_steps):
        rec = step(model, x, stream.at_step(i), cap, log_lik_in=ll)
        x, ll = rec.x_out, rec.log_lik_out
        samples[i] = x
        iters[i], evals[i], caps[i] = rec.shrink_iterations, rec.likelihood_evals, rec.cap_hit
    return ChainResult(samples, iters, evals, caps, wall_time=time.perf_counter() - start)


class BatchStep(NamedTuple):
    x_out: np.ndarray
    iterations: np.ndarray
    cap_hit: np.ndarray
    collapsed: np.ndarray
    log_lik_out: np.ndarray
    angle: np.ndarray  # radians, nan on cap hits


def ess_step_batch(model: TargetModel, X, rng, cap: int = DEFAULT_CAP, *, log_lik=None,
                   fault: Optional[str] = None) -> BatchStep:
    """Apply one shrinkage-form transition to each row of ``X`` independently.

    Variates are consumed blockwise (all thresholds, all prior draws, then
    one uniform per active row and angle draw); a batch of one row
    reproduces :func:`ess_step` exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise DimensionMismatch(f"batch must have shape (n, {model.dim}), got {X.shape}")
    n = X.shape[0]
    ll = model.log_likelihood(X) if log_lik is None else np.asarray(log_lik, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_t = ll + np.log(rng.random(n))
    W = sample_prior(model.prior, rng, size=n)
    ll_out = np.array(ll, dtype=np.float64, copy=True)

    def member(rows, g):
        t = g * TICK
        P = np.cos(t)[:, None] * X[rows] + np.sin(t)[:, None] * W[rows]
        v = model.log_likelihood(P)
        ok = v > log_t[rows]
        ll_out[rows[ok]] = v[ok]
        return ok

    res = shrink_batch(np.zeros(n, dtype=np.int64), member, rng, cap, fault=fault)
    t = np.where(res.accepted, res.angle * TICK, np.nan)
    ts = np.nan_to_num(t)
    X_out = np.where(res.accepted[:, None], np.cos(ts)[:, None] * X + np.sin(ts)[:, None] * W, X)
    return BatchStep(X_out, res.iterations, ~res.accepted, res.collapsed, ll_out, t)
