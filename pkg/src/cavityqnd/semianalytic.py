"""Single-band Gaussian model of the atom-field state.

With the band energy expanded to second order around the packet's
quasi-momentum, each photon-number component stays Gaussian: its centre moves
with the group velocity ``v_g^n`` and its complex squared width grows as
``1/(4 dp**2) + i t / (2 m_n*)``.  All quantities here are closed form once the
band points are known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import BandPoint, BlochSolution, band_point, solve_bands
from .errors import ParameterError, ResolutionError
from .field import FieldState, von_neumann_entropy
from .model import fold_momentum


@dataclass(frozen=True)
class MomentumGaussian:
    """``psi(p) = (2 pi dp**2)**(-1/4) exp(-(p - p0)**2 / (4 dp**2))``."""

    p0: float
    dp: float

    def amplitude(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return (2 * np.pi * self.dp**2) ** -0.25 * np.exp(-((p - self.p0) ** 2) / (4 * self.dp**2))

    @property
    def dx(self) -> float:
        """Position spread of the minimum-uncertainty packet."""
        return 0.5 / self.dp


def initial_packet(p0: float, dp: float) -> MomentumGaussian:
    if not dp > 0:
        raise ParameterError("dp must be positive")
    return MomentumGaussian(float(p0), float(dp))


@dataclass(frozen=True)
class GaussianComponent:
    """Wave packet of the ``n``-photon component at time ``t``.

    ``complex_width`` is ``Delta_x**2 = 1/(4 dp**2) + i t inverse_mass / 2``.
    """

    n: int
    t: float
    center: float
    complex_width: complex
    v_g: float
    inverse_mass: float
    energy: float
    dp: float

    @property
    def m_star(self) -> float:
        return math.inf if self.inverse_mass == 0 else 1.0 / self.inverse_mass

    @property
    def width(self) -> float:
        """Standard deviation of ``|psi_n|**2``."""
        a = 0.25 / self.dp**2
        return abs(self.complex_width) / math.sqrt(a)

    def amplitude(self, x) -> np.ndarray:
        a = 0.25 / self.dp**2
        s = self.complex_width
        pref = (a / (2 * np.pi)) ** 0.25 / np.sqrt(s)
        y = np.asarray(x, dtype=float) - self.center
        return pref * np.exp(-(y**2) / (4 * s) - 1j * self.energy * self.t)

    def density(self, x) -> np.ndarray:
        return np.abs(self.amplitude(x)) ** 2


def photon_bands(p0: float, U: float, n: int) -> BlochSolution:
    """Bloch solution at the packet's quasi-momentum for depth ``U*n``."""
    f = fold_momentum(p0)
    return solve_bands(U * n, q_grid=[f.q0], n_bands=f.band)


def evolve_component(n: int, t: float, p0: float, dp: float, U: float,
                     bands: BlochSolution | BandPoint | None = None) -> GaussianComponent:
    """Gaussian ``n``-photon component at time ``t`` (centre starts at 0).

    ``bands`` may be a solution for depth ``U*n`` or a precomputed
    :class:`BandPoint`; it is solved on the fly if omitted.
    """
    f = fold_momentum(p0)
    if isinstance(bands, BandPoint):
        bp = bands
        if bp.band != f.band:
            raise ParameterError(f"band point is on band {bp.band}, packet on {f.band}")
    else:
        if bands is None:
            bands = photon_bands(p0, U, n)
        elif not math.isclose(bands.depth, U * n, abs_tol=1e-12):
            raise ParameterError(f"band solution depth {bands.depth} != U*n = {U * n}")
        bp = band_point(bands, f.band, f.q0)
    a = 0.25 / dp**2
    return GaussianComponent(
        n=n, t=float(t), center=bp.group_velocity * t,
        complex_width=complex(a, 0.5 * t * bp.inverse_effective_mass),
        v_g=bp.group_velocity, inverse_mass=bp.inverse_effective_mass,
        energy=bp.energy, dp=dp)


def band_points(p0: float, U: float, n_max: int) -> list[BandPoint]:
    """Band point of every photon number ``0..n_max`` at the packet's quasi-momentum."""
    f = fold_momentum(p0)
    return [band_point(photon_bands(p0, U, n), f.band, f.q0) for n in range(n_max + 1)]


@dataclass(frozen=True)
class AtomFieldState:
    components: tuple
    field: FieldState

    @property
    def amplitudes(self) -> np.ndarray:
        return self.field.amplitudes


def atom_field_state(field: FieldState, t: float, p0: float, dp: float, U: float,
                     points: list[BandPoint] | None = None) -> AtomFieldState:
    if points is None:
        points = band_points(p0, U, field.n_max)
    comps = tuple(evolve_component(n, t, p0, dp, U, points[n])
                  for n in range(field.n_max + 1))
    return AtomFieldState(comps, field)


def atomic_density(state: AtomFieldState, x) -> np.ndarray:
    """``rho(x) = sum_n |c_n|**2 |psi_n(x)|**2``.

    Raises :class:`ResolutionError` if the grid spacing exceeds a quarter of
    the narrowest component width.
    """
    x = np.asarray(x, dtype=float)
    if x.size > 1:
        h = float(np.max(np.diff(x)))
        narrow = min(c.width for c in state.components)
        if narrow / h < 4:
            raise ResolutionError(f"grid spacing {h:.3g} too coarse for width {narrow:.3g}")
    probs = state.field.probabilities
    rho = np.zeros_like(x)
    for p, c in zip(probs, state.components):
        if p > 0:
            rho += p * c.density(x)
    return rho


def overlap_matrix(components) -> np.ndarray:
    """``O[m, n] = <psi_m|psi_n>`` from the closed-form Gaussian integral."""
    comps = list(components)
    c = np.array([k.center for k in comps])
    s = np.array([k.complex_width for k in comps])
    ph = np.array([k.energy * k.t for k in comps])
    a = 0.25 / comps[0].dp ** 2
    norm = (a / (2 * np.pi)) ** 0.25 / np.sqrt(s)
    sm = np.conj(s)[:, None]
    sn = s[None, :]
    cm = c[:, None]
    cn = c[None, :]
    A = 1 / (4 * sm) + 1 / (4 * sn)
    B = cm / (2 * sm) + cn / (2 * sn)
    C = cm**2 / (4 * sm) + cn**2 / (4 * sn)
    integral = np.sqrt(np.pi / A) * np.exp(B**2 / (4 * A) - C)
    phase = np.exp(1j * (ph[:, None] - ph[None, :]))
    return np.conj(norm)[:, None] * norm[None, :] * integral * phase


def reduced_field_matrix(state: AtomFieldState) -> np.ndarray:
    """``rho_f[n, m] = c_n conj(c_m) <psi_m|psi_n>``."""
    c = state.amplitudes
    return np.outer(c, np.conj(c)) * overlap_matrix(state.components).T


def max_entropy(field: FieldState) -> float:
    """Entropy of the fully decohered field, ``-sum |c_n|**2 ln |c_n|**2``."""
    p = field.probabilities
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def field_entropy(state: AtomFieldState) -> float:
    """von Neumann entropy of the reduced field state."""
    return von_neumann_entropy(reduced_field_matrix(state))


def entropy_trajectory(field: FieldState, times, p0: float, dp: float, U: float,
                       points: list[BandPoint] | None = None):
    """Field entropy ``S_f(t)`` at each time, and its maximum ``S_max``."""
    if points is None:
        points = band_points(p0, U, field.n_max)
    S = np.array([field_entropy(atom_field_state(field, t, p0, dp, U, points))
                  for t in np.atleast_1d(times)])
    return S, max_entropy(field)
