# %% [markdown]
# # Phase-space picture of the measurement
#
# The Husimi function of the initial coherent state is a Gaussian centred on
# `alpha = 2`.  After successive detections it turns into the ring
# `|alpha| = sqrt(n)` of a Fock state.

# %%
import numpy as np
import matplotlib.pyplot as plt

from cavityqnd.field import alpha_grid, coherent_state, husimi_q
from cavityqnd.measurement import build_components, make_rng, run_cascade
from cavityqnd.model import SimulationParams
from cavityqnd.presets import cavity_run

params = SimulationParams(**cavity_run(600.0))
comps = build_components(params, cache_dir="../.cache/components")
re, im, alpha = alpha_grid()

# %%
c = run_cascade(comps, coherent_state(2.0), make_rng(7), max_atoms=10, stop_at_collapse=False)
fig, axes = plt.subplots(1, 4, figsize=(12, 3))
for ax, j in zip(axes, sorted(c.snapshots)):
    q = husimi_q(c.snapshots[j], alpha)
    ax.contourf(re, im, q, 30)
    ax.set_title(f"after {j} atoms")
    ax.set_aspect("equal")

# %%
final = c.snapshots[10]
n = int(np.argmax(final.probabilities))
q = husimi_q(final, alpha)
i, k = np.unravel_index(np.argmax(q), q.shape)
print(f"dominant n = {n} (P = {final.probabilities[n]:.3f}), "
      f"|alpha| at the maximum = {np.hypot(re[k], im[i]):.3f}, sqrt(n) = {np.sqrt(n):.3f}")
