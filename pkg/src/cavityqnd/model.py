"""Dimensionless parameters, unit scaling and momentum folding.

Energies are measured in units of the two-photon recoil energy
``E_2r = hbar**2 k**2 / m``, positions in units of ``1/k`` and times in units
of ``hbar / E_2r``.  In these units the atom has unit mass and the lattice
potential ``cos(x)**2`` has period ``pi``, so the reciprocal lattice vector
is 2.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import constants, stats

from .errors import ParameterError

MAX_GRID_SPACING = 0.1
FOCK_TAIL = 1e-8


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionful inputs (SI units, energies in joules)."""

    coupling_raw: float
    detuning_raw: float
    wavenumber: float
    mass: float
    cavity_length_raw: float | None = None
    hbar: float = constants.hbar

    def __post_init__(self):
        if not self.wavenumber > 0:
            raise ParameterError(f"wavenumber must be positive, got {self.wavenumber}")
        if not self.mass > 0:
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if self.detuning_raw == 0:
            raise ParameterError("detuning_raw must be nonzero")

    @property
    def recoil_energy(self) -> float:
        return self.hbar**2 * self.wavenumber**2 / self.mass


@dataclass(frozen=True)
class Units:
    """Conversion factors between SI and dimensionless quantities."""

    energy: float
    length: float
    time: float

    @classmethod
    def from_physical(cls, phys: PhysicalParams) -> "Units":
        e = phys.recoil_energy
        return cls(energy=e, length=1.0 / phys.wavenumber, time=phys.hbar / e)


def scale_parameters(phys: PhysicalParams) -> dict:
    """Convert the physical coupling, detuning and cavity length.

    Returns a partial parameter set with keys ``g0``, ``delta``, ``U`` and
    ``L``; the remaining entries of :class:`SimulationParams` are already
    dimensionless.
    """
    units = Units.from_physical(phys)
    g0 = phys.coupling_raw / units.energy
    delta = phys.detuning_raw / units.energy
    L = None if phys.cavity_length_raw is None else phys.cavity_length_raw / units.length
    return {"g0": g0, "delta": delta, "U": dispersive_depth(g0, delta), "L": L}


def unscale_parameters(scaled: dict, wavenumber: float, mass: float,
                       hbar: float = constants.hbar) -> PhysicalParams:
    """Inverse of :func:`scale_parameters` for a given wavenumber and mass."""
    if not wavenumber > 0 or not mass > 0:
        raise ParameterError("wavenumber and mass must be positive")
    e = hbar**2 * wavenumber**2 / mass
    L = scaled.get("L")
    return PhysicalParams(
        coupling_raw=scaled["g0"] * e,
        detuning_raw=scaled["delta"] * e,
        wavenumber=wavenumber,
        mass=mass,
        cavity_length_raw=None if L is None else L / wavenumber,
        hbar=hbar,
    )


def dispersive_depth(g0: float, delta: float, n_max: int | None = None) -> float:
    """Single-photon lattice depth ``U = g0**2 / delta`` of the dispersive limit.

    Warns when ``|delta| < 10 g0 sqrt(n_max)``, where eliminating the excited
    level is no longer justified.
    """
    if delta == 0:
        raise ZeroDivisionError("dispersive depth needs a nonzero detuning")
    if n_max is not None and abs(delta) < 10 * abs(g0) * math.sqrt(n_max):
        warnings.warn(
            f"|delta|={abs(delta):g} is not >> g0*sqrt(n_max)={abs(g0) * math.sqrt(n_max):g}; "
            "the dispersive reduction may be inaccurate",
            stacklevel=2,
        )
    return g0 * g0 / delta


def dispersive_pair(U: float, ratio: float, n: float) -> tuple[float, float]:
    """Return ``(g0, delta)`` with ``g0**2/delta = U`` and ``delta = ratio*g0*sqrt(n)``."""
    if U <= 0 or ratio <= 0 or n <= 0:
        raise ParameterError("U, ratio and n must be positive")
    g0 = U * ratio * math.sqrt(n)
    return g0, ratio * g0 * math.sqrt(n)


class FoldedMomentum(NamedTuple):
    band: int
    q0: float
    shift: float


def fold_momentum(p0: float) -> FoldedMomentum:
    """Fold a free momentum into the first Brillouin zone ``[-1, 1)``.

    ``band`` is the extended-zone band index (band ``nu`` holds momenta with
    ``nu - 1 <= |p| < nu``) and ``shift`` the reciprocal lattice vector, a
    multiple of 2, with ``q0 + shift == p0``.
    """
    shift = 2.0 * math.floor((p0 + 1.0) / 2.0)
    q0 = p0 - shift
    # guards against floor rounding at the zone edge
    if q0 >= 1.0:
        shift += 2.0
        q0 = p0 - shift
    elif q0 < -1.0:
        shift -= 2.0
        q0 = p0 - shift
    return FoldedMomentum(band=int(math.floor(abs(p0))) + 1, q0=q0, shift=shift)


def default_fock_cutoff(nbar: float, tail: float = FOCK_TAIL) -> int:
    """Smallest ``n_max`` whose Poisson(nbar) cumulative weight exceeds ``1 - tail``."""
    if nbar < 0:
        raise ParameterError("nbar must be non-negative")
    if nbar == 0:
        return 0
    n = int(math.ceil(nbar))
    while stats.poisson.sf(n, nbar) >= tail:
        n += 1
    return n


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid ``x_min + i*spacing`` for ``i < n_points``."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ParameterError(f"grid.n_points must be a power of two, got {n}")
        if not self.x_max > self.x_min:
            raise ParameterError("grid.x_max must exceed grid.x_min")
        if self.spacing > MAX_GRID_SPACING:
            raise ParameterError(
                f"grid spacing {self.spacing:.4g} exceeds {MAX_GRID_SPACING}")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def refined(self) -> "GridSpec":
        """Same interval with twice the points."""
        return GridSpec(self.x_min, self.x_max, 2 * self.n_points)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def auto_grid(x0: float, dx_packet: float, p0: float, dp: float, t_f: float,
              L: float | None = None, max_spacing: float = MAX_GRID_SPACING) -> GridSpec:
    """Grid wide enough that no part of the packet reaches an edge by ``t_f``.

    Transmitted and reflected parts both travel at most at the largest free
    speed ``|p0| + 4 dp``; the margin allows for dispersive spreading.
    """
    vmax = abs(p0) + 4 * dp
    spread = math.hypot(dx_packet, t_f / dx_packet)
    margin = 8 * spread + 20
    left = min(x0 - 5 * dx_packet, x0 - vmax * t_f) - margin
    right = max(x0 + 5 * dx_packet, x0 + vmax * t_f) + margin
    if L is not None:
        left = min(left, -L / 2 - margin)
        right = max(right, L / 2 + margin)
    n = 1 << max(6, math.ceil(math.log2((right - left) / max_spacing)))
    return GridSpec(left, right, n)


@dataclass(frozen=True, kw_only=True)
class SimulationParams:
    """All dimensionless model parameters of one simulation.

    Exactly one of ``dp`` and ``dx_packet`` is given; the other follows from
    ``dp * dx_packet = 1/2``.  ``U`` may be given directly or derived from
    ``g0`` and ``delta``.  ``L = None`` means an unbounded lattice.
    """

    p0: float
    dp: float | None = None
    dx_packet: float | None = None
    x0: float = 0.0
    U: float | None = None
    g0: float | None = None
    delta: float | None = None
    L: float | None = None
    X_s: float = 0.2
    nbar: float = 4.0
    n_max: int | None = None
    grid: GridSpec | None = None
    dt: float = 0.01
    t_f: float = 0.0
    seed: int = 0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731

        if (self.dp is None) == (self.dx_packet is None):
            raise ParameterError("give exactly one of dp and dx_packet")
        if self.dp is not None:
            if not self.dp > 0:
                raise ParameterError("dp must be positive")
            set_("dx_packet", 0.5 / self.dp)
        else:
            if not self.dx_packet > 0:
                raise ParameterError("dx_packet must be positive")
            set_("dp", 0.5 / self.dx_packet)

        if self.g0 is not None and self.delta is not None:
            if self.delta == 0:
                raise ParameterError("delta must be nonzero")
            U = self.g0**2 / self.delta
            if self.U is None:
                set_("U", U)
            elif not math.isclose(self.U, U, rel_tol=1e-9, abs_tol=1e-12):
                raise ParameterError(f"U={self.U} inconsistent with g0**2/delta={U}")
        elif (self.g0 is None) != (self.delta is None):
            raise ParameterError("g0 and delta must be given together")
        if self.U is None:
            raise ParameterError("missing required parameter: U (or g0 and delta)")

        if self.L is not None:
            if self.L < 20 * math.pi:
                raise ParameterError(f"L={self.L} is not much larger than the period 2*pi")
            if not 0 < self.X_s <= 0.01 * self.L:
                raise ParameterError(f"X_s={self.X_s} must be positive and << L")
        if self.nbar < 0:
            raise ParameterError("nbar must be non-negative")
        if self.n_max is None:
            set_("n_max", default_fock_cutoff(self.nbar))
        elif self.n_max < 0:
            raise ParameterError("n_max must be non-negative")
        else:
            set_("n_max", int(self.n_max))
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if self.t_f < 0:
            raise ParameterError("t_f must be non-negative")

        if self.grid is None:
            set_("grid", auto_grid(self.x0, self.dx_packet, self.p0, self.dp,
                                   self.t_f, self.L))
        elif isinstance(self.grid, dict):
            set_("grid", GridSpec(**self.grid))
        self._check_grid()

    def _check_grid(self):
        g = self.grid
        if g.nyquist < 4 * abs(self.p0):
            raise ParameterError(
                f"grid Nyquist momentum {g.nyquist:.3g} < 4*|p0| = {4 * abs(self.p0):.3g}")
        if not g.x_min < self.x0 - 5 * self.dx_packet:
            raise ParameterError("grid.x_min must lie below x0 - 5*dx_packet")
        if not g.x_max > self.x0 + 5 * self.dx_packet:
            raise ParameterError("grid.x_max must lie above x0 + 5*dx_packet")

    @property
    def folded(self) -> FoldedMomentum:
        return fold_momentum(self.p0)

    def depth(self, n: int) -> float:
        """Lattice depth ``U*n`` seen by the atom with ``n`` photons."""
        return self.U * n

    def replace(self, **changes) -> "SimulationParams":
        """Copy with changes; derived quantities are recomputed."""
        d = self.to_dict()
        if "dp" in changes:
            d.pop("dx_packet")
        elif "dx_packet" in changes:
            d.pop("dp")
        else:
            d.pop("dx_packet")
        if any(k in changes for k in ("x0", "p0", "t_f", "L", "dp", "dx_packet")):
            d["grid"] = None
        if "nbar" in changes:
            d["n_max"] = None
        d.update(changes)
        return SimulationParams(**d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = self.grid.to_dict()
        return d
