"""The shrinkage procedure on the circle.

Given a target set ``S`` (through a membership oracle) and an anchor
``theta`` in ``S``, shrinkage draws a uniform angle, and while the draw
misses ``S`` it cuts the current bracket at the draw, keeping the side that
still holds the anchor, then redraws uniformly on the smaller bracket.

The scalar functions (:func:`init_shrink`, :func:`shrink_step`,
:func:`shrink`, :func:`unstopped_run`) follow the procedure one draw at a
time.  :func:`shrink_batch` and :func:`unstopped_batch` run many independent
copies at once on tick arrays and are what the verification harness uses.

Discretization
--------------
Angles live on a grid of ``TICKS_PER_TURN`` points.  Every draw excludes the
anchor tick; this removes a null set, so the sampling law is unchanged, but
it keeps the state in the region where draw and anchor differ.  Once the
bracket holds no tick except the anchor, the bracket cannot be told apart
from the anchor at working precision.  Such runs are reported as
``collapsed`` and treated like a cap hit (or, with
``fallback_to_anchor=True``, they return the anchor).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .circle import (
    TICKS_PER_TURN, Angle, ArcSet, GeneralizedInterval, I, Icirc, as_angle,
    contains, contains_I_ticks, length_I_ticks,
)
from .errors import PreconditionViolated, ZeroLengthInterval

__all__ = [
    "DEFAULT_CAP", "FAULTS", "ShrinkTriple", "SliceOracle", "ShrinkOutcome", "as_oracle",
    "init_shrink", "shrink_step", "shrink", "unstopped_run", "estimate_Q",
    "QEstimate", "shrink_batch", "unstopped_batch", "draw_excluding",
]

DEFAULT_CAP = 1000

# Deliberately wrong variants of the case split, for negative controls.
#   "linear_split": decide the side by comparing raw angles, ignoring the
#   wrap-around of the circle (so the anchor may leave the bracket).
FAULTS = ("linear_split",)


@dataclass(frozen=True)
class ShrinkTriple:
    """State ``(gamma, gmin, gmax)`` of the unstopped shrinkage chain."""

    gamma: Angle
    gmin: Angle
    gmax: Angle

    @property
    def interval(self) -> GeneralizedInterval:
        return I(self.gmin, self.gmax)

    def in_lambda(self) -> bool:
        return contains(self.interval, self.gamma)

    def in_lambda_theta(self, theta) -> bool:
        theta = as_angle(theta)
        iv = self.interval
        return contains(iv, self.gamma) and contains(iv, theta) and self.gamma != theta

    def in_G_alpha(self, alpha) -> bool:
        alpha = as_angle(alpha)
        open_iv = Icirc(self.gmin, self.gmax)
        return (
            contains(open_iv, alpha) and contains(open_iv, self.gamma)
            and alpha not in (self.gamma, self.gmin, self.gmax)
        )


@dataclass
class SliceOracle:
    """Membership predicate for a subset of the circle.

    ``membership`` must be pure.  ``calls`` counts evaluations.
    """

    membership: Callable[[Angle], bool]
    description: str = ""
    calls: int = field(default=0, compare=False)

    def __call__(self, angle) -> bool:
        self.calls += 1
        return bool(self.membership(as_angle(angle)))


def as_oracle(S) -> SliceOracle:
    if isinstance(S, SliceOracle):
        return S
    if isinstance(S, ArcSet):
        return SliceOracle(S.__contains__, repr(S))
    if isinstance(S, GeneralizedInterval):
        return SliceOracle(lambda a: contains(S, a), repr(S))
    if callable(S):
        return SliceOracle(S, getattr(S, "__name__", "callable"))
    raise TypeError(f"cannot use {type(S).__name__} as a slice oracle")


@dataclass(frozen=True)
class ShrinkOutcome:
    """Result of one call to :func:`shrink`.

    ``angle`` is ``None`` when the run was stopped without finding a point
    of ``S`` (``cap_exceeded``).  ``collapsed`` marks runs stopped because
    the bracket shrank to the anchor tick.  ``fallback`` marks runs where
    the anchor was returned in place of a cap hit.
    """

    angle: Optional[Angle]
    iterations: int
    evals: int
    cap_exceeded: bool = False
    collapsed: bool = False
    fallback: bool = False

    @property
    def accepted(self) -> bool:
        return not self.cap_exceeded and not self.fallback


def draw_excluding(iv: GeneralizedInterval, anchor: Optional[Angle], rng) -> Optional[Angle]:
    """Uniform draw on ``iv`` without the anchor tick.

    Uses exactly one ``rng.random()`` variate: for ``lo < hi`` the draw is
    ``lo + offset``; otherwise ``V = lo - 2pi + offset`` is shifted by a full
    turn when negative.  Returns ``None`` if ``iv`` holds no tick besides
    the anchor.
    """
    n = iv.length_ticks
    if n == 0:
        raise ZeroLengthInterval(f"cannot sample from empty interval {iv!r}")
    a, b = iv.lo.ticks, iv.hi.ticks
    skip = None
    if anchor is not None and contains(iv, anchor):
        skip = (anchor.ticks - a) % TICKS_PER_TURN
        n -= 1
        if n == 0:
            return None
    u = rng.random()
    offset = min(int(u * n), n - 1)
    if skip is not None and offset >= skip:
        offset += 1
    if a < b:
        return Angle(a + offset)
    v = a - TICKS_PER_TURN + offset
    if v < 0:
        v += TICKS_PER_TURN
    return Angle(v)


def init_shrink(rng, anchor=None) -> ShrinkTriple:
    """Draw ``Gamma_1 ~ U[0, 2pi)`` and return ``(Gamma_1, Gamma_1, Gamma_1)``."""
    g = draw_excluding(I(0.0, 0.0), None if anchor is None else as_angle(anchor), rng)
    return ShrinkTriple(g, g, g)


def _split(theta: Angle, z: ShrinkTriple, fault=None):
    """New ``(gmin, gmax)`` after cutting the bracket at ``z.gamma``."""
    if fault == "linear_split":
        keep_upper = z.gamma.ticks < theta.ticks
    else:
        keep_upper = contains(I(z.gamma, z.gmax), theta)
    if keep_upper:
        return z.gamma, z.gmax
    return z.gmin, z.gamma


def shrink_step(theta, z: ShrinkTriple, rng, *, fault=None, check=True) -> ShrinkTriple:
    """One transition of the unstopped shrinkage chain with anchor ``theta``.

    If ``theta`` lies in ``I(gamma, gmax)`` the lower end moves up to
    ``gamma``; otherwise (``theta`` in ``J(gmin, gamma)``) the upper end
    moves down to ``gamma``.  The next ``gamma`` is uniform on the new
    bracket.

    Raises
    ------
    PreconditionViolated
        If ``z`` is not a valid state for anchor ``theta`` (``check=True``).
    ZeroLengthInterval
        If the new bracket holds only the anchor tick.
    """
    theta = as_angle(theta)
    if check and not z.in_lambda_theta(theta):
        raise PreconditionViolated(f"{z!r} is not a valid shrink state for anchor {theta!r}")
    gmin, gmax = _split(theta, z, fault)
    gamma = draw_excluding(I(gmin, gmax), theta, rng)
    if gamma is None:
        raise ZeroLengthInterval("bracket collapsed onto the anchor")
    out = ShrinkTriple(gamma, gmin, gmax)
    if __debug__ and fault is None:
        assert out.in_lambda_theta(theta)
    return out


def shrink(theta_in, S, rng, cap: int = DEFAULT_CAP, *, fallback_to_anchor=False,
           fault=None, check_anchor=True) -> ShrinkOutcome:
    """Run the shrinkage procedure from anchor ``theta_in`` on the set ``S``.

    Parameters
    ----------
    theta_in : Angle or float
        Anchor; must satisfy the oracle.
    S : SliceOracle, ArcSet or callable
        Target set, accessed only through membership queries.
    rng : numpy Generator (anything with ``random()``)
    cap : int
        Maximum number of oracle evaluations.
    fallback_to_anchor : bool
        Return the anchor instead of a cap-exceeded outcome.  This is how
        finite-precision implementations behave in practice, but it is not
        the exact kernel, hence off by default.
    fault : str, optional
        Inject a known-wrong case split (see ``FAULTS``).
    check_anchor : bool
        Verify ``theta_in`` against the oracle first (one extra evaluation).
    """
    theta = as_angle(theta_in)
    oracle = as_oracle(S)
    if cap < 1:
        raise ValueError("cap must be a positive integer")
    if check_anchor and not oracle(theta):
        raise PreconditionViolated(f"anchor {theta!r} is not in S")
    z = init_shrink(rng, anchor=theta)
    evals = 0
    iterations = 1
    collapsed = False
    while True:
        evals += 1
        if oracle(z.gamma):
            return ShrinkOutcome(z.gamma, iterations, evals)
        if evals >= cap:
            break
        gmin, gmax = _split(theta, z, fault)
        gamma = draw_excluding(I(gmin, gmax), theta, rng)
        if gamma is None:
            collapsed = True
            break
        z = ShrinkTriple(gamma, gmin, gmax)
        iterations += 1
    if fallback_to_anchor:
        return ShrinkOutcome(theta, iterations, evals, collapsed=collapsed, fallback=True)
    return ShrinkOutcome(None, iterations, evals, cap_exceeded=True, collapsed=collapsed)


def unstopped_run(theta, steps: int, rng) -> list:
    """The first ``steps`` states of the unstopped shrinkage chain."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    theta = as_angle(theta)
    z = init_shrink(rng, anchor=theta)
    run = [z]
    for _ in range(steps - 1):
        z = shrink_step(theta, z, rng, check=False)
        run.append(z)
    return run


class QEstimate(NamedTuple):
    estimate: float
    std_error: float
    cap_hits: int
    n: int


def estimate_Q(S, theta, F, n: int, rng, cap: int = DEFAULT_CAP, *, fault=None) -> QEstimate:
    """Monte Carlo estimate of the shrinkage kernel ``Q_S(theta, F)``.

    Runs that stop without finding ``S`` count toward the complement of
    ``F``.  With both ``S`` and ``F`` given as :class:`ArcSet` the runs are
    vectorized; any other oracle is run one call at a time.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = as_angle(theta)
    if isinstance(S, ArcSet) and isinstance(F, ArcSet):
        if theta not in S:
            raise PreconditionViolated(f"anchor {theta!r} is not in S")
        res = shrink_batch(np.full(n, theta.ticks, dtype=np.int64), S, rng, cap, fault=fault)
        hits = res.accepted & F.contains_ticks(res.angle)
        k, cap_hits = int(hits.sum()), int((~res.accepted).sum())
    else:
        oracle, f_oracle = as_oracle(S), as_oracle(F)
        k = cap_hits = 0
        for _ in range(n):
            out = shrink(theta, oracle, rng, cap, fault=fault)
            if out.cap_exceeded:
                cap_hits += 1
            elif f_oracle(out.angle):
                k += 1
    p = k / n
    return QEstimate(p, float(np.sqrt(p * (1.0 - p) / n)), cap_hits, n)


# ---------------------------------------------------------------------------
# vectorized runs


class BatchOutcome(NamedTuple):
    angle: np.ndarray       # ticks; meaningful where accepted
    iterations: np.ndarray  # realized stopping time (draws made)
    accepted: np.ndarray    # bool
    collapsed: np.ndarray   # bool


def _draw_batch(lo, hi, theta, u):
    """Vectorized :func:`draw_excluding`; returns ``(ticks, ok)``."""
    n = length_I_ticks(lo, hi)
    holds = contains_I_ticks(lo, hi, theta)
    m = np.where(holds, n - 1, n)
    ok = m > 0
    m_safe = np.maximum(m, 1)
    offset = np.minimum((u * m_safe).astype(np.int64), m_safe - 1)
    skip = (theta - lo) % TICKS_PER_TURN
    offset = offset + (holds & (offset >= skip))
    return (lo + offset) % TICKS_PER_TURN, ok


def _split_batch(theta, gamma, gmin, gmax, fault=None):
    if fault == "linear_split":
        keep_upper = gamma < theta
    else:
        keep_upper = contains_I_ticks(gamma, gmax, theta)
    return np.where(keep_upper, gamma, gmin), np.where(keep_upper, gmax, gamma)


def shrink_batch(theta, member, rng, cap: int = DEFAULT_CAP, *, fault=None) -> BatchOutcome:
    """Independent shrinkage runs, one per entry of ``theta`` (tick array).

    ``member`` is an :class:`ArcSet` or a function ``(rows, ticks) -> bool
    array`` answering membership for the runs indexed by ``rows``.
    Uniform variates are consumed as ``rng.random(k)`` with ``k`` the number
    of runs still active, so a batch of one consumes the same variates as
    :func:`shrink`.
    """
    theta = np.asarray(theta, dtype=np.int64)
    if isinstance(member, ArcSet):
        arcs = member
        member = lambda rows, g: arcs.contains_ticks(g)  # noqa: E731
    n = theta.shape[0]
    full = np.zeros(n, dtype=np.int64)
    gamma, _ = _draw_batch(full, full, theta, rng.random(n))
    gmin = gamma.copy()
    gmax = gamma.copy()
    iterations = np.ones(n, dtype=np.int64)
    collapsed = np.zeros(n, dtype=bool)
    accepted = np.zeros(n, dtype=bool)
    rows = np.arange(n)
    hit = member(rows, gamma)
    accepted[rows[hit]] = True
    active = rows[~hit]
    evals = 1
    while active.size and evals < cap:
        th = theta[active]
        lo, hi = _split_batch(th, gamma[active], gmin[active], gmax[active], fault)
        g, ok = _draw_batch(lo, hi, th, rng.random(active.size))
        collapsed[active[~ok]] = True
        gmin[active], gmax[active], gamma[active] = lo, hi, g
        active = active[ok]
        g = g[ok]
        iterations[active] += 1
        hit = member(active, g)
        accepted[active[hit]] = True
        active = active[~hit]
        evals += 1
    return BatchOutcome(gamma, iterations, accepted, collapsed)


def unstopped_batch(theta, steps: int, rng):
    """Final states ``(gamma, gmin, gmax)`` of independent unstopped runs."""
    theta = np.asarray(theta, dtype=np.int64)
    n = theta.shape[0]
    full = np.zeros(n, dtype=np.int64)
    gamma, _ = _draw_batch(full, full, theta, rng.random(n))
    gmin, gmax = gamma.copy(), gamma.copy()
    for _ in range(steps - 1):
        gmin, gmax = _split_batch(theta, gamma, gmin, gmax)
        gamma, ok = _draw_batch(gmin, gmax, theta, rng.random(n))
        if not ok.all():
            raise ZeroLengthInterval("bracket collapsed onto the anchor in an unstopped run")
    return gamma, gmin, gmax
