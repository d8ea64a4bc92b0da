"""Shrinkage on the circle
=======================

Sample a uniform angle from a set of arcs with the shrinkage loop and look
at how many draws it takes.  Run with ``python3 demos/01_shrinkage_on_the_circle.py``.
"""
# %%
import math

import numpy as np

from ellipslice import ArcSet, as_angle, shrink, shrink_batch
from ellipslice.circle import TICK, TWO_PI

rng = np.random.default_rng(1)

# %% [markdown]
# The target set is two quarter circles.  Angles are stored as integer
# ticks (2**48 per turn), so wrap-around and endpoint tests are exact.

# %%
S = ArcSet.from_radians([(0.0, math.pi / 2), (math.pi, 1.5 * math.pi)])
print("S =", S, " length / 2pi =", S.length / TWO_PI)

# %%
out = shrink(as_angle(0.3), S, rng)
print(f"one run: accepted {out.angle.value:.4f} after {out.iterations} draw(s)")

# %% [markdown]
# The vectorized path runs many independent loops at once.  Starting from
# uniform anchors in S the accepted angles are again uniform on S.

# %%
n = 10**5
anchors = S.sample_ticks(n, rng)
res = shrink_batch(anchors, S, rng)
angles = res.angle * TICK
print("share in the first arc:", np.mean(angles < math.pi / 2), "(expected 0.5)")
print("mean number of draws:", res.iterations.mean())
print("draw-count histogram:", np.bincount(res.iterations)[1:8])

# %% [markdown]
# For a single arc of half-width eps around the anchor the number of draws
# has a geometric tail with rate 1 - eps / 2pi.

# %%
eps = 0.3
arc = ArcSet.from_radians([(1.0 - eps, 1.0 + eps)])
res = shrink_batch(np.full(n, as_angle(1.0).ticks), arc, rng)
for k in (1, 2, 5, 10):
    print(f"P(tau > {k:2d}) = {np.mean(res.iterations > k):.4f}   bound {(1 - eps / TWO_PI) ** (k - 1):.4f}")
