# %% [markdown]
# # Wave packets crossing the cavity
#
# The split-operator propagator follows the `n`-photon packet through a
# cavity of length `L` with smooth edges.  Inside, the momentum dips to the
# band's group velocity; after the exit it returns to `p0`.  The time of
# flight encodes the photon number.

# %%
import numpy as np
import matplotlib.pyplot as plt

from cavityqnd.measurement import build_components
from cavityqnd.model import SimulationParams
from cavityqnd.presets import cavity_run
from cavityqnd.propagator import TrajectoryLog, time_of_flight

CACHE = "../.cache/components"

# %% [markdown]
# Propagating the 21 photon numbers for `L = 600` takes a few minutes on one
# core; results are cached on disk and reused by the measurement notebook.

# %%
params = SimulationParams(**cavity_run(600.0))
comps = build_components(params, cache_dir=CACHE)
cut = -params.L / 2 - 10 * params.X_s

fig, ax = plt.subplots(figsize=(6, 3.5))
for n in range(5):
    log = TrajectoryLog.from_array(comps.logs[n], cut)
    ax.plot(log.times, log.forward_mean_p, label=f"n = {n}")
    tof = time_of_flight(log, params.L)
    print(f"n = {n}: tau = {tof.tau:6.1f}, L/tau = {tof.velocity:.4f}, "
          f"final <p> = {log.forward_mean_p[-1]:.4f}")
ax.set_xlabel("t")
ax.set_ylabel("forward <p>")
ax.legend()

# %% [markdown]
# Forward transmission per photon number.  Large `n` lifts the lattice above
# the atom's kinetic energy and the atom is reflected.

# %%
for n, T in enumerate(comps.transmission):
    print(f"n = {n:2d}: transmission {T:.3e}{'  (dark)' if comps.dark[n] else ''}")

# %%
fig, ax = plt.subplots(figsize=(6, 3.5))
for n in range(6):
    ax.plot(comps.x, np.abs(comps.psi[n]) ** 2, label=f"n = {n}")
ax.set_xlabel("x")
ax.set_ylabel("|psi_n'(x, t_f)|^2")
ax.legend()
