"""Angles and generalized intervals on the circle [0, 2*pi).

Angles are stored as an integer number of ticks, ``TICKS_PER_TURN`` ticks
making a full turn.  All circle arithmetic (membership, lengths, reflection)
is then exact integer arithmetic, so identities such as
``reflect(t, reflect(t, a)) == a`` hold bit for bit.  Radians are available
through :attr:`Angle.value`; the tick spacing is about 2.2e-14 rad.

Three interval kinds are supported, for ``lo = a`` and ``hi = b``:

========  ====================  ===========================  ==========
kind      a < b                 a > b                        a == b
========  ====================  ===========================  ==========
``I``     ``[a, b)``            ``[0, b) u [a, 2pi)``        full circle
``J``     ``[a, b)``            ``[0, b) u [a, 2pi)``        empty
``Icirc`` ``(a, b)``            ``[0, b) u (a, 2pi)``        full circle
========  ====================  ===========================  ==========

Vectorized counterparts (suffix ``_ticks``) operate on integer tick arrays
and back the batch samplers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionViolated, ZeroLengthInterval

__all__ = [
    "TICKS_PER_TURN", "TICK", "TWO_PI", "Angle", "as_angle", "normalize",
    "GeneralizedInterval", "I", "J", "Icirc", "contains", "length",
    "sample_uniform", "reflect", "reflect_interval", "ArcSet",
    "contains_I_ticks", "length_I_ticks", "sample_I_ticks",
    "ticks_to_radians",
]

TICKS_PER_TURN = 1 << 48
TWO_PI = 2.0 * math.pi
TICK = TWO_PI / TICKS_PER_TURN  # radians per tick (exact power-of-two scaling)

KINDS = ("I", "J", "Icirc")


def _ticks_from_radians(x: float) -> int:
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x!r}")
    # Python's % on ints is the modulo with the negative-branch correction;
    # a value rounding to a full turn wraps to 0.
    return round(x / TICK) % TICKS_PER_TURN


@dataclass(frozen=True, order=True)
class Angle:
    """A point of [0, 2*pi) held as ``ticks`` in ``[0, TICKS_PER_TURN)``."""

    ticks: int

    def __post_init__(self):
        if not 0 <= self.ticks < TICKS_PER_TURN:
            object.__setattr__(self, "ticks", int(self.ticks) % TICKS_PER_TURN)

    @classmethod
    def from_radians(cls, x: float) -> "Angle":
        return cls(_ticks_from_radians(float(x)))

    @property
    def value(self) -> float:
        """The angle in radians, in ``[0, 2*pi)``."""
        return self.ticks * TICK

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"Angle({self.value!r})"


def as_angle(a) -> Angle:
    """Accept an :class:`Angle` or a real number of radians."""
    if isinstance(a, Angle):
        return a
    return Angle.from_radians(a)


def normalize(x: float) -> float:
    """Map radians to ``[0, 2*pi)`` on the tick grid."""
    return _ticks_from_radians(float(x)) * TICK


def ticks_to_radians(t):
    return np.asarray(t, dtype=np.float64) * TICK


@dataclass(frozen=True)
class GeneralizedInterval:
    kind: str
    lo: Angle
    hi: Angle

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown interval kind {self.kind!r}")
        object.__setattr__(self, "lo", as_angle(self.lo))
        object.__setattr__(self, "hi", as_angle(self.hi))

    def __contains__(self, gamma):
        return contains(self, gamma)

    @property
    def length(self) -> float:
        return length(self)

    @property
    def length_ticks(self) -> int:
        a, b = self.lo.ticks, self.hi.ticks
        if a < b:
            return b - a
        if a > b:
            return TICKS_PER_TURN - a + b
        return 0 if self.kind == "J" else TICKS_PER_TURN

    @property
    def is_full(self) -> bool:
        return self.kind != "J" and self.lo == self.hi

    def __repr__(self):
        return f"{self.kind}({self.lo.value!r}, {self.hi.value!r})"


def I(alpha, beta) -> GeneralizedInterval:  # noqa: E743 - matches the usual notation
    return GeneralizedInterval("I", as_angle(alpha), as_angle(beta))


def J(alpha, beta) -> GeneralizedInterval:
    return GeneralizedInterval("J", as_angle(alpha), as_angle(beta))


def Icirc(alpha, beta) -> GeneralizedInterval:
    """Open arc from ``alpha`` to ``beta`` (full circle when they coincide)."""
    return GeneralizedInterval("Icirc", as_angle(alpha), as_angle(beta))


def contains(iv: GeneralizedInterval, gamma) -> bool:
    g = as_angle(gamma).ticks
    a, b = iv.lo.ticks, iv.hi.ticks
    if iv.kind == "Icirc":
        if a < b:
            return a < g < b
        if a > b:
            return g < b or g > a
        return True
    if a < b:
        return a <= g < b
    if a > b:
        return g < b or g >= a
    return iv.kind == "I"


def length(iv: GeneralizedInterval) -> float:
    """Lebesgue measure of ``iv`` in radians."""
    return iv.length_ticks * TICK


def sample_uniform(iv: GeneralizedInterval, rng) -> Angle:
    """Draw uniformly from ``iv`` using one ``rng.random()`` variate.

    For ``lo < hi`` the draw is ``lo + u * len``.  Otherwise ``V`` is drawn
    on ``[lo - 2pi, hi)`` and shifted by a full turn when negative, which
    realizes the wrap-around arc (and the full circle when ``lo == hi``).
    Open arcs never return an endpoint.
    """
    n = iv.length_ticks
    if n == 0:
        raise ZeroLengthInterval(f"cannot sample from empty interval {iv!r}")
    a, b = iv.lo.ticks, iv.hi.ticks
    u = rng.random()
    if iv.kind == "Icirc" and a != b:
        if n < 2:
            raise ZeroLengthInterval(f"open arc {iv!r} holds no tick")
        offset = 1 + min(int(u * (n - 1)), n - 2)
    else:
        offset = min(int(u * n), n - 1)
    if a < b:
        return Angle(a + offset)
    v = a - TICKS_PER_TURN + offset
    if v < 0:
        v += TICKS_PER_TURN
    return Angle(v)


def reflect(theta, alpha) -> Angle:
    """The reflection ``alpha -> (theta - alpha) mod 2pi``; an involution."""
    return Angle((as_angle(theta).ticks - as_angle(alpha).ticks) % TICKS_PER_TURN)


def reflect_interval(theta, iv: GeneralizedInterval) -> GeneralizedInterval:
    """Image of an open arc under :func:`reflect`: endpoints swap roles."""
    if iv.kind != "Icirc":
        raise PreconditionViolated(f"reflect_interval needs an Icirc arc, got kind {iv.kind!r}")
    return Icirc(reflect(theta, iv.hi), reflect(theta, iv.lo))


# ---------------------------------------------------------------------------
# vectorized tick arithmetic for I-intervals


def contains_I_ticks(lo, hi, g):
    """Elementwise membership of ``g`` in ``I(lo, hi)`` (tick arrays)."""
    lo, hi, g = np.asarray(lo), np.asarray(hi), np.asarray(g)
    inner = (lo <= g) & (g < hi)
    wrap = (g < hi) | (g >= lo)
    return np.where(lo < hi, inner, np.where(lo > hi, wrap, True))


def length_I_ticks(lo, hi):
    lo, hi = np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64)
    d = hi - lo
    return np.where(d > 0, d, d + TICKS_PER_TURN)


def sample_I_ticks(lo, hi, u):
    """Vectorized :func:`sample_uniform` for ``I(lo, hi)`` given uniforms ``u``."""
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    n = length_I_ticks(lo, hi)
    offset = np.minimum((np.asarray(u) * n).astype(np.int64), n - 1)
    v = np.where(lo < hi, lo, lo - TICKS_PER_TURN) + offset
    return np.where(v < 0, v + TICKS_PER_TURN, v)


def _linear_pieces(kind, a, b):
    """Split an interval into pieces ``[s, e)`` of the unwrapped line."""
    if a < b:
        return [(a, b)]
    if a > b:
        return [(a, TICKS_PER_TURN), (0, b)]
    return [] if kind == "J" else [(0, TICKS_PER_TURN)]


class ArcSet:
    """A finite union of generalized intervals, used as a target set.

    Arcs must be pairwise disjoint up to endpoints.  An ArcSet built only
    from open arcs is open on the circle.
    """

    max_arcs = 8

    def __init__(self, arcs: Iterable[GeneralizedInterval] = ()):
        self.arcs = tuple(arcs)
        if len(self.arcs) > self.max_arcs:
            raise ValueError(f"at most {self.max_arcs} arcs supported, got {len(self.arcs)}")
        pieces = sorted(p for iv in self.arcs for p in _linear_pieces(iv.kind, iv.lo.ticks, iv.hi.ticks))
        for (s0, e0), (s1, e1) in zip(pieces, pieces[1:]):
            if s1 < e0:
                raise ValueError("arcs of an ArcSet must not overlap")
        self._pieces = np.array(pieces, dtype=np.int64).reshape(-1, 2)
        n = self._pieces[:, 1] - self._pieces[:, 0]
        self.length_ticks = int(n.sum())
        self._cum = np.cumsum(n)

    @classmethod
    def from_radians(cls, pairs: Sequence[Sequence[float]], kind="Icirc") -> "ArcSet":
        return cls(GeneralizedInterval(kind, as_angle(a), as_angle(b)) for a, b in pairs)

    @classmethod
    def full(cls) -> "ArcSet":
        return cls([I(0.0, 0.0)])

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls([])

    def __repr__(self):
        return f"ArcSet({list(self.arcs)!r})"

    def __contains__(self, gamma):
        g = as_angle(gamma)
        return any(contains(iv, g) for iv in self.arcs)

    def __call__(self, gamma) -> bool:
        return gamma in self

    @property
    def length(self) -> float:
        return self.length_ticks * TICK

    @property
    def is_open_on_circle(self) -> bool:
        return all(iv.kind == "Icirc" or iv.is_full for iv in self.arcs)

    def contains_ticks(self, g):
        g = np.asarray(g)
        out = np.zeros(g.shape, dtype=bool)
        for iv in self.arcs:
            a, b = iv.lo.ticks, iv.hi.ticks
            if iv.kind == "Icirc":
                if a < b:
                    out |= (g > a) & (g < b)
                elif a > b:
                    out |= (g < b) | (g > a)
                else:
                    out[...] = True
            elif a < b:
                out |= (g >= a) & (g < b)
            elif a > b:
                out |= (g < b) | (g >= a)
            elif iv.kind == "I":
                out[...] = True
        return out

    def sample_ticks(self, n: int, rng) -> np.ndarray:
        """``n`` draws from the uniform distribution on the set."""
        if self.length_ticks == 0:
            raise ZeroLengthInterval("cannot sample from an empty ArcSet")
        pos = np.minimum((rng.random(n) * self.length_ticks).astype(np.int64), self.length_ticks - 1)
        k = np.searchsorted(self._cum, pos, side="right")
        before = np.concatenate(([0], self._cum[:-1]))
        t = self._pieces[k, 0] + (pos - before[k])
        # open arcs: endpoints have probability ~2**-48, push them inside
        bad = ~self.contains_ticks(t)
        if bad.any():
            t[bad] = (t[bad] + 1) % TICKS_PER_TURN
        return t

    def sample(self, rng) -> Angle:
        return Angle(int(self.sample_ticks(1, rng)[0]))

    def overlap_ticks(self, lo, hi):
        """Measure of ``self`` intersected with ``I(lo, hi)``, elementwise."""
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        # I(lo, hi) as up to two line pieces [lo, e1) and [0, hi2)
        e1 = np.where(lo < hi, hi, TICKS_PER_TURN)
        hi2 = np.where(lo < hi, 0, hi)
        total = np.zeros(np.broadcast(lo, hi).shape, dtype=np.int64)
        for s, e in self._pieces:
            total += np.clip(np.minimum(e, e1) - np.maximum(s, lo), 0, None)
            total += np.clip(np.minimum(e, hi2) - s, 0, None)
        return total

    def measure_of(self, other: "ArcSet") -> int:
        """Ticks of ``self`` intersected with ``other``."""
        total = 0
        for s, e in other._pieces:
            for s2, e2 in self._pieces:
                total += max(0, min(e, e2) - max(s, s2))
        return int(total)

    def contains_set(self, other: "ArcSet") -> bool:
        """True when ``other`` lies in ``self`` up to a null set."""
        return self.measure_of(other) == other.length_ticks

    def reflected(self, theta) -> "ArcSet":
        """Image of the set under ``reflect(theta, .)`` (open arcs only)."""
        arcs = []
        for iv in self.arcs:
            if iv.is_full:
                arcs.append(iv)
            else:
                arcs.append(reflect_interval(theta, iv))
        return ArcSet(arcs)

    def pieces(self):
        """Disjoint line pieces ``[s, e)`` in ticks."""
        return self._pieces.copy()
