"""When the shrinkage loop does not stop
======================================

A likelihood that is 1 + eps on the unit cube and eps elsewhere is not
lower semi-continuous.  Started at the cube's corner x = 0, ESS can end up
with a slice that holds only the current angle.  The loop then never stops.
The probability of that event is (2**d - 2) / (2**d (1 + eps)).
"""
# %%
import numpy as np

from ellipslice import RngStream, SpectralCovariance, TargetModel, ess_step, ess_step_batch
from ellipslice.likelihoods import IndicatorCube

eps = 0.1

# %%
for d in (2, 3):
    model = TargetModel(IndicatorCube(eps), SpectralCovariance(np.ones(d)))
    out = ess_step_batch(model, np.zeros((10**5, d)), RngStream(d).generator, cap=200)
    target = (2 ** d - 2) / (2 ** d * (1 + eps))
    print(f"d={d}: cap-hit frequency {out.cap_hit.mean():.4f}, predicted {target:.4f}")

# %% [markdown]
# By default a step that exhausts its budget is reported and the state is
# kept.  Asking for ``fallback_to_anchor`` returns the anchor angle instead.

# %%
model = TargetModel(IndicatorCube(eps), SpectralCovariance(np.ones(2)))
stream = RngStream(11)
for i in range(5):
    rec = ess_step(model, np.zeros(2), stream.at_step(i), cap=100)
    print(f"step {i}: cap hit {rec.cap_hit}, shrink iterations {rec.shrink_iterations}")

# %%
rec = ess_step(model, np.zeros(2), stream.at_step(1), cap=100, fallback_to_anchor=True)
print("with fallback: angle", rec.angle, "cap hit", rec.cap_hit, "state", rec.x_out)
