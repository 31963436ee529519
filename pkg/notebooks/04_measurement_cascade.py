# %% [markdown]
# # Repeated atomic detections collapse the field onto a Fock state
#
# Each detected atom position `x_r` multiplies the photon amplitudes by
# `psi_n'(x_r)`.  Repeating this "photon filter" drives the field to a single
# photon number, drawn with the prior Poisson probabilities.

# %%
import numpy as np
import matplotlib.pyplot as plt

from cavityqnd.field import coherent_state
from cavityqnd.measurement import (build_components, expected_posterior, make_rng,
                                   posterior_entropies, run_cascade)
from cavityqnd.model import SimulationParams
from cavityqnd.presets import cavity_run

CACHE = "../.cache/components"

# %%
runs = {}
for L in (1400.0, 600.0, 200.0):
    params = SimulationParams(**cavity_run(L))
    runs[L] = build_components(params, cache_dir=CACHE)
field0 = coherent_state(2.0)

# %% [markdown]
# One cascade per cavity length, same seed.

# %%
fig, axes = plt.subplots(1, 3, figsize=(10, 3), sharey=True)
for ax, (L, comps) in zip(axes, runs.items()):
    c = run_cascade(comps, field0, make_rng(1))
    for r in c.records:
        ax.plot(r.probabilities, marker=".", label=f"j = {r.atom_index}")
    ax.set_title(f"L = {L:.0f}: {len(c.records)} atoms")
    ax.set_xlabel("n")
axes[0].set_ylabel("|c_n|^2")

# %% [markdown]
# Atoms needed for collapse over 200 seeds, and the collapsed photon number
# against the prior.  Cascades still open after 50 atoms count as infinite in
# the median.

# %%
for L, comps in runs.items():
    cs = [run_cascade(comps, field0, make_rng(s)) for s in range(200)]
    atoms = [c.atoms_to_collapse if c.collapsed else np.inf for c in cs]
    hist = np.bincount([c.collapsed_n for c in cs if c.collapsed], minlength=21)
    print(f"L = {L:6.0f}: {sum(c.collapsed for c in cs)}/200 collapsed, "
          f"median {np.median(atoms):4.1f} atoms, collapsed n histogram {hist[:11].tolist()}")
print("prior x 200:", np.round(200 * field0.probabilities[:11], 1).tolist())

# %% [markdown]
# The filter is a martingale: averaged over outcomes, the posterior equals
# the prior restricted to photon numbers that reach the detector.

# %%
comps = runs[1400.0]
post = expected_posterior(comps, field0)
lit = ~comps.dark
print("max |E[posterior] - conditioned prior| =",
      np.abs(post - field0.probabilities * lit / field0.probabilities[lit].sum()).max())
c = run_cascade(comps, field0, make_rng(3))
print("Shannon entropy after each atom:", np.round(posterior_entropies(c), 3))
