"""Split-operator propagation of the atomic wave packet through the cavity.

The dispersive Hamiltonian for ``n`` photons is
``p**2/2 + U n cos(x)**2 w(x)`` where the envelope ``w`` switches the lattice
on over a length ``X_s`` around ``x = -L/2`` and off around ``x = L/2``.  The
grid is periodic and nothing absorbs at its edges, so a run fails loudly with
:class:`BoundaryLeakError` if probability gets there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import AccuracyError, BoundaryLeakError, NoSignalError, ParameterError
from .model import GridSpec

LEAK_TOL = 1e-6
NO_SIGNAL_TOL = 1e-6


@dataclass
class Wavefunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise ParameterError("wavefunction values do not match the grid")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        # trapezoid rule on a periodic grid
        return float(self.grid.spacing * np.sum(self.density))

    def normalized(self) -> "Wavefunction":
        return Wavefunction(self.grid, self.values / math.sqrt(self.norm()))

    def mean_x(self) -> float:
        rho = self.density
        return float(np.sum(self.x * rho) / np.sum(rho))

    def mean_p(self) -> float:
        phat = np.abs(sfft.fft(self.values)) ** 2
        return float(np.sum(self.grid.k * phat) / np.sum(phat))

    def derivative(self) -> np.ndarray:
        return sfft.ifft(1j * self.grid.k * sfft.fft(self.values))

    def kinetic_energy(self) -> float:
        phat = np.abs(sfft.fft(self.values)) ** 2
        return float(0.5 * np.sum(self.grid.k**2 * phat) / np.sum(phat))


def gaussian_packet(grid: GridSpec, x0: float, p0: float, dx_packet: float) -> Wavefunction:
    """Minimum-uncertainty packet with position spread ``dx_packet``."""
    x = grid.x
    amp = (2 * np.pi * dx_packet**2) ** -0.25 * np.exp(
        -((x - x0) ** 2) / (4 * dx_packet**2) + 1j * p0 * (x - x0))
    return Wavefunction(grid, amp)


def free_gaussian(grid: GridSpec, x0: float, p0: float, dx_packet: float,
                  t: float) -> Wavefunction:
    """Exact free evolution of :func:`gaussian_packet` to time ``t``."""
    x = grid.x
    s = dx_packet**2 + 0.5j * t
    y = x - x0 - p0 * t
    amp = ((2 * np.pi) ** -0.25 * np.sqrt(dx_packet / s)
           * np.exp(-(y**2) / (4 * s) + 1j * p0 * (x - x0) - 0.5j * p0**2 * t))
    return Wavefunction(grid, amp)


@dataclass(frozen=True)
class EnvelopePotential:
    """``V_n(x) = U n cos(x)**2 w(x)``; ``L = None`` gives ``w = 1``."""

    U: float
    n: int
    L: float | None = None
    X_s: float = 0.2

    def __post_init__(self):
        if self.L is not None and not self.X_s > 0:
            raise ParameterError("X_s must be positive")
        if self.U < 0 or self.n < 0:
            raise ParameterError("U and n must be non-negative")

    @property
    def depth(self) -> float:
        return self.U * self.n

    def envelope(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.L is None:
            return np.ones_like(x)
        h = self.L / 2
        return 0.5 * (np.tanh((x + h) / self.X_s) - np.tanh((x - h) / self.X_s))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.depth * np.cos(x) ** 2 * self.envelope(x)

    @property
    def forward_cut(self) -> float:
        """Lower edge of the region that counts as forward-moving."""
        if self.L is None:
            return -np.inf
        return -self.L / 2 - 10 * self.X_s


def _potential_values(V, grid: GridSpec) -> np.ndarray:
    if callable(V):
        return np.asarray(V(grid.x), dtype=float)
    if np.isscalar(V):
        return np.full(grid.n_points, float(V))
    V = np.asarray(V, dtype=float)
    if V.shape != (grid.n_points,):
        raise ParameterError("potential array does not match the grid")
    return V


class SplitOperator:
    """Strang splitting ``exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2)``.

    Consecutive half potential steps are fused, so ``n`` steps cost ``2n``
    FFTs and ``n + 1`` potential multiplications.
    """

    def __init__(self, grid: GridSpec, V, dt: float):
        if not dt > 0:
            raise ParameterError("dt must be positive")
        self.grid = grid
        self.dt = dt
        self.V = _potential_values(V, grid)
        self.half = np.exp(-0.5j * dt * self.V)
        self.full = self.half * self.half
        self.kinetic = np.exp(-0.5j * dt * grid.k**2)

    def advance(self, values: np.ndarray, n_steps: int) -> np.ndarray:
        psi = values * self.half
        for i in range(n_steps):
            psi = sfft.fft(psi, overwrite_x=True)
            psi *= self.kinetic
            psi = sfft.ifft(psi, overwrite_x=True)
            psi *= self.full if i < n_steps - 1 else self.half
        return psi


def split_step(psi: Wavefunction, V, dt: float) -> Wavefunction:
    """One Strang step of length ``dt``; ``V`` is an array, scalar or callable."""
    return Wavefunction(psi.grid, SplitOperator(psi.grid, V, dt).advance(psi.values, 1))


def energy(psi: Wavefunction, V) -> float:
    """``<H>`` for a normalized or unnormalized state."""
    v = _potential_values(V, psi.grid)
    rho = psi.density
    return psi.kinetic_energy() + float(np.sum(v * rho) / np.sum(rho))


@dataclass
class TrajectoryLog:
    """Observables sampled during :func:`propagate`.

    The ``forward_*`` columns restrict to ``x > forward_cut`` so that atoms
    reflected at the cavity entrance do not bias the transmitted signal.
    """

    forward_cut: float
    times: list = field(default_factory=list)
    mean_x: list = field(default_factory=list)
    mean_p: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    forward_fraction: list = field(default_factory=list)
    forward_mean_x: list = field(default_factory=list)
    forward_mean_p: list = field(default_factory=list)

    COLUMNS = ("t", "mean_x", "mean_p", "norm", "forward_fraction",
               "forward_mean_x", "forward_mean_p")

    def record(self, t: float, psi: Wavefunction):
        if self.times and t <= self.times[-1]:
            raise ValueError("sample times must increase")
        x, dx = psi.x, psi.grid.spacing
        phat = sfft.fft(psi.values)
        rho = psi.density
        total = np.sum(rho)
        current = np.real(np.conj(psi.values) * -1j * sfft.ifft(1j * psi.grid.k * phat))
        fwd = x > self.forward_cut
        fwd_total = np.sum(rho[fwd])
        self.times.append(float(t))
        self.norm.append(float(dx * total))
        self.mean_x.append(float(np.sum(x * rho) / total))
        self.mean_p.append(float(np.sum(current) / total))
        self.forward_fraction.append(float(fwd_total / total))
        if fwd_total > 0:
            self.forward_mean_x.append(float(np.sum(x[fwd] * rho[fwd]) / fwd_total))
            self.forward_mean_p.append(float(np.sum(current[fwd]) / fwd_total))
        else:
            self.forward_mean_x.append(math.nan)
            self.forward_mean_p.append(math.nan)

    def as_array(self) -> np.ndarray:
        return np.column_stack([np.asarray(getattr(self, c if c != "t" else "times"))
                                for c in self.COLUMNS])

    @classmethod
    def from_array(cls, arr: np.ndarray, forward_cut: float) -> "TrajectoryLog":
        """Inverse of :meth:`as_array`."""
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(cls.COLUMNS):
            raise ParameterError(f"expected columns {cls.COLUMNS}")
        cols = {("times" if c == "t" else c): list(arr[:, i]) for i, c in enumerate(cls.COLUMNS)}
        return cls(forward_cut=forward_cut, **cols)


def _edge_probability(psi: Wavefunction) -> float:
    n = psi.grid.n_points
    strip = max(8, n // 100)
    rho = psi.density
    return float(psi.grid.spacing * (np.sum(rho[:strip]) + np.sum(rho[-strip:])))


def _n_steps(t_f: float, dt: float) -> int:
    n = round(t_f / dt)
    if abs(n * dt - t_f) > 1e-9 * max(1.0, t_f):
        raise ParameterError(f"t_f={t_f} is not a multiple of dt={dt}")
    return n


def propagate(psi0: Wavefunction, V, t_f: float, dt: float = 0.01,
              sample_every: float = 1.0, forward_cut: float | None = None,
              check_boundary: bool = True) -> tuple[Wavefunction, TrajectoryLog]:
    """Evolve ``psi0`` to ``t_f``, sampling observables every ``sample_every``.

    ``V`` may be an :class:`EnvelopePotential`, any callable of ``x``, an
    array on the grid or a scalar.  ``forward_cut`` defaults to
    ``V.forward_cut`` when available.
    """
    if forward_cut is None:
        forward_cut = getattr(V, "forward_cut", -np.inf)
    n_total = _n_steps(t_f, dt)
    stride = max(1, round(sample_every / dt))
    stepper = SplitOperator(psi0.grid, V, dt)
    log = TrajectoryLog(forward_cut=forward_cut)

    psi = psi0
    log.record(0.0, psi)
    done = 0
    while done < n_total:
        k = min(stride, n_total - done)
        psi = Wavefunction(psi.grid, stepper.advance(psi.values, k))
        done += k
        log.record(done * dt, psi)
        if check_boundary:
            leak = _edge_probability(psi)
            if leak > LEAK_TOL:
                raise BoundaryLeakError(
                    f"probability {leak:.2e} at the grid edges at t={done * dt:g}; "
                    "enlarge the grid")
    return psi, log


@dataclass
class TwoLevelResult:
    ground: Wavefunction
    excited: Wavefunction
    times: np.ndarray
    excited_population: np.ndarray


def _two_level_block(omega: np.ndarray, delta: float, tau: float):
    # exp(-i tau H) for H = [[0, omega], [omega, -delta]] at every grid point
    m0 = -0.5 * delta
    h = 0.5 * delta
    w = np.sqrt(h * h + omega * omega)
    c = np.cos(w * tau)
    s = np.where(w > 0, np.sin(w * tau) / np.where(w > 0, w, 1.0), tau)
    ph = np.exp(-1j * m0 * tau)
    return ph * (c - 1j * s * h), ph * (-1j * s * omega), ph * (c + 1j * s * h)


def propagate_two_level(psi0: Wavefunction, n: int, g0: float, delta: float,
                        L: float | None, X_s: float, t_f: float, dt: float = 0.01,
                        sample_every: float = 0.1, initial: str = "g",
                        check_boundary: bool = True) -> TwoLevelResult:
    """Evolve the ground/excited spinor of the ``n``-photon block.

    The internal Hamiltonian in the ``(|n, g>, |n-1, e>)`` basis is
    ``[[0, Omega], [Omega, -delta]]`` with ``Omega = g0 sqrt(n) cos(x) w(x)``;
    adiabatic elimination of the excited level then gives the ground state
    the repulsive potential ``(g0**2/delta) n cos(x)**2`` for ``delta > 0``.
    The constant ``delta/2`` common to both levels is dropped.
    """
    if initial not in ("g", "e"):
        raise ParameterError("initial must be 'g' or 'e'")
    grid = psi0.grid
    env = EnvelopePotential(U=1.0, n=0, L=L, X_s=X_s).envelope(grid.x)
    omega = g0 * math.sqrt(n) * np.cos(grid.x) * env
    a, b, d = _two_level_block(omega, delta, 0.5 * dt)
    kinetic = np.exp(-0.5j * dt * grid.k**2)

    g = psi0.values.astype(complex) if initial == "g" else np.zeros(grid.n_points, complex)
    e = psi0.values.astype(complex) if initial == "e" else np.zeros(grid.n_points, complex)
    n_total = _n_steps(t_f, dt)
    stride = max(1, round(sample_every / dt))
    times, pops = [0.0], [float(grid.spacing * np.sum(np.abs(e) ** 2))]

    for i in range(n_total):
        g, e = a * g + b * e, b * g + d * e
        g = sfft.ifft(kinetic * sfft.fft(g))
        e = sfft.ifft(kinetic * sfft.fft(e))
        g, e = a * g + b * e, b * g + d * e
        if (i + 1) % stride == 0 or i == n_total - 1:
            times.append((i + 1) * dt)
            pops.append(float(grid.spacing * np.sum(np.abs(e) ** 2)))
            if check_boundary:
                leak = _edge_probability(Wavefunction(grid, g)) + _edge_probability(
                    Wavefunction(grid, e))
                if leak > LEAK_TOL:
                    raise BoundaryLeakError(f"probability {leak:.2e} at the grid edges")
    return TwoLevelResult(Wavefunction(grid, g), Wavefunction(grid, e),
                          np.asarray(times), np.asarray(pops))


def forward_renormalize(psi, grid: GridSpec | None = None, cut: float = 0.0) -> np.ndarray:
    """Density restricted to ``x >= cut`` and renormalized there.

    ``psi`` is a :class:`Wavefunction` or a density array on ``grid``.
    """
    if isinstance(psi, Wavefunction):
        grid, rho = psi.grid, psi.density
    else:
        if grid is None:
            raise ParameterError("a density array needs its grid")
        rho = np.asarray(psi, dtype=float)
    mask = grid.x >= cut
    mass = grid.spacing * float(np.sum(rho[mask]))
    if mass < NO_SIGNAL_TOL:
        raise NoSignalError(f"forward probability {mass:.2e} beyond x={cut:g}")
    out = np.where(mask, rho, 0.0) / mass
    return out


@dataclass(frozen=True)
class TimeOfFlight:
    tau: float
    velocity: float
    t_enter: float
    t_exit: float


def _crossing(t, x, level):
    above = np.nonzero(x >= level)[0]
    if above.size == 0 or above[0] == 0:
        return None
    i = above[0]
    return float(t[i - 1] + (level - x[i - 1]) * (t[i] - t[i - 1]) / (x[i] - x[i - 1]))


def time_of_flight(log: TrajectoryLog, L: float) -> TimeOfFlight:
    """Cavity traversal time ``tau`` and velocity estimate ``L / tau``.

    Entry is when the centroid of the whole packet crosses ``-L/2`` (nothing
    has been reflected yet), exit when the forward centroid crosses ``L/2``.
    Crossing times are linearly interpolated between samples.
    """
    t = np.asarray(log.times)
    t_in = _crossing(t, np.asarray(log.mean_x), -L / 2)
    xf = np.asarray(log.forward_mean_x)
    ok = np.isfinite(xf)
    t_out = _crossing(t[ok], xf[ok], L / 2)
    if t_in is None or t_out is None or t_out <= t_in:
        raise AccuracyError("the packet does not traverse the cavity within the log")
    tau = t_out - t_in
    return TimeOfFlight(tau=tau, velocity=L / tau, t_enter=t_in, t_exit=t_out)
