# %% [markdown]
# # Dispersive limit of the two-level atom
#
# Far from resonance the excited level can be eliminated and the ground
# state feels `U n cos(x)**2` with `U = g0**2/delta`.  Here the full spinor
# dynamics is compared with the dispersive model at `delta = 20 g0 sqrt(n)`.

# %%
import numpy as np
import matplotlib.pyplot as plt

from cavityqnd.model import GridSpec, dispersive_pair
from cavityqnd.propagator import (EnvelopePotential, gaussian_packet, propagate,
                                  propagate_two_level)

n = 4
g0, delta = dispersive_pair(0.7, 20.0, n)
grid = GridSpec(-200.0, 200.0, 8192)
psi0 = gaussian_packet(grid, -70.0, 3.75, 5.0)

# %%
two = propagate_two_level(psi0, n, g0, delta, 80.0, 0.2, 30.0, dt=0.0025, sample_every=0.05)
disp, _ = propagate(psi0, EnvelopePotential(g0**2 / delta, n, 80.0, 0.2), 30.0, dt=0.0025)
l2 = np.sqrt(grid.spacing * np.sum((two.ground.density - disp.density) ** 2))
print(f"g0 = {g0}, delta = {delta}, ground-density L2 difference = {l2:.2e}")
print(f"max excited population {two.excited_population.max():.2e}, "
      f"bound 4 (g0 sqrt n / delta)^2 = {4 * (g0 * np.sqrt(n) / delta) ** 2:.2e}")

# %%
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 3.5))
a.plot(grid.x, two.ground.density, label="two-level, ground")
a.plot(grid.x, disp.density, "--", label="dispersive")
a.set_xlim(-60, 80)
a.legend()
b.plot(two.times, two.excited_population)
b.set_xlabel("t")
b.set_ylabel("excited population")
