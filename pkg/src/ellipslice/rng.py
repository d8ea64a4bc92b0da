"""Counter-based, splittable random streams.

Every stream is a Philox generator whose key is derived from
``(seed, *key)`` through :class:`numpy.random.SeedSequence`.  Streams can be
split into independent children (one per chain, per test, ...) and addressed
per step: ``stream.at_step(i)`` returns a generator positioned at a counter
block reserved for step ``i``.  Inside a step, draws are consumed in a fixed
order, so the position of a draw in that order is its slot.
"""
from __future__ import annotations

import numpy as np

__all__ = ["RngStream", "as_generator"]

# Step index goes into the third counter word; the first two words are left
# for the draws within a step (2**128 blocks, never exhausted).
_STEP_WORD = 2


class RngStream:
    """A keyed Philox stream.

    Parameters
    ----------
    seed : int
        Root seed (any non-negative integer, 64-bit in practice).
    *key : int
        Path of non-negative integers identifying the stream below the root,
        e.g. ``(chain_id,)`` or ``(test_id, side)``.
    """

    def __init__(self, seed: int, *key: int):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._philox_key = ss.generate_state(2, dtype=np.uint64)
        self._generator = None

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"

    def split(self, *key: int) -> "RngStream":
        """Child stream whose key path extends this one."""
        return RngStream(self.seed, *self.key, *key)

    @property
    def generator(self) -> np.random.Generator:
        """Sequential generator over the whole stream (counter starts at 0)."""
        if self._generator is None:
            self._generator = np.random.Generator(np.random.Philox(key=self._philox_key))
        return self._generator

    def at_step(self, step: int) -> np.random.Generator:
        """Fresh generator for the counter block of ``step``.

        Two calls with the same step return generators producing identical
        variates, which is what lets two algorithm variants share draws.
        """
        counter = np.zeros(4, dtype=np.uint64)
        counter[_STEP_WORD] = step + 1
        return np.random.Generator(np.random.Philox(key=self._philox_key, counter=counter))

    # Generator-like conveniences so a stream can be passed where a
    # numpy Generator is expected.
    def random(self, *args, **kwargs):
        return self.generator.random(*args, **kwargs)

    def standard_normal(self, *args, **kwargs):
        return self.generator.standard_normal(*args, **kwargs)


def as_generator(rng) -> np.random.Generator:
    """Coerce ``None``, an int seed, an RngStream or a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator
    # duck-typed replay sources used in tests
    return rng
