# %% [markdown]
# # Bloch bands of the photon-number lattice
#
# An atom crossing the cavity with `n` photons sees the potential
# `U n cos(x)**2`.  Its spectrum splits into Bloch bands `E_nu(q)` with
# quasi-momentum `q` in `[-1, 1)`.  This notebook draws the first three bands
# for `U n = 0.5`, checks the band edges against Mathieu characteristic values
# and shows how the group velocity at a fixed `q` falls as photons are added.

# %%
import numpy as np
import matplotlib.pyplot as plt
from scipy.special import mathieu_a, mathieu_b

from cavityqnd.bloch import band_point, decompose_packet, quasi_momentum_grid, solve_bands
from cavityqnd.model import fold_momentum
from cavityqnd.semianalytic import initial_packet

# %%
q = quasi_momentum_grid(512)
sol = solve_bands(0.5, q, n_bands=3)
free = solve_bands(0.0, q, n_bands=3)

fig, ax = plt.subplots(figsize=(5, 4))
for nu in range(1, 4):
    ax.plot(q, sol.band(nu), label=f"nu = {nu}")
    ax.plot(q, free.band(nu), "k:", lw=0.8)
ax.set_xlabel("q")
ax.set_ylabel("E")
ax.legend()
ax.set_title("U n = 0.5 (dotted: free particle)")

# %% [markdown]
# With `a = 2E - V` and `q_M = V/2`, the lattice Hamiltonian is Mathieu's
# equation, so the band energies at `q = 0` and `q = -1` are characteristic
# values.

# %%
V = 0.5
edges = solve_bands(V, np.array([0.0]), n_bands=3).energies[:, 0]
mathieu = (np.array([mathieu_a(0, V / 2), mathieu_b(2, V / 2), mathieu_a(2, V / 2)]) + V) / 2
print("bands at q=0 :", edges)
print("Mathieu      :", mathieu)

# %% [markdown]
# ## Group velocity and effective mass at the packet's quasi-momentum

# %%
p0 = 2.58
f = fold_momentum(p0)
print(f"p0 = {p0} -> band {f.band}, q0 = {f.q0:.2f}")
for n in range(0, 11, 2):
    bp = band_point(solve_bands(0.7 * n, np.array([f.q0]), n_bands=f.band), f.band, f.q0)
    print(f"n = {n:2d}: v_g = {bp.group_velocity:.5f}, 1/m* = {bp.inverse_effective_mass:.4f}")

# %% [markdown]
# The packet `dp = p0/50` populates the third band almost exclusively.

# %%
dec = decompose_packet(initial_packet(p0, p0 / 50), solve_bands(0.7, q, n_bands=5))
print("band weights:", np.round(dec.weights[:5], 6))
