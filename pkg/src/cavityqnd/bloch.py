"""Bloch bands of ``H = p**2/2 + depth*cos(x)**2`` by plane-wave diagonalization.

For quasi-momentum ``q`` the Bloch function is expanded in plane waves
``exp(i(q + 2m)x)`` with ``|m| <= cutoff``.  Since
``cos(x)**2 = 1/2 + (exp(2ix) + exp(-2ix))/4`` the Hamiltonian is tridiagonal
with diagonal ``(q + 2m)**2/2 + depth/2`` and off-diagonal ``depth/4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erfc

from .errors import AccuracyError, CutoffError, ParameterError, ResolutionError

DEFAULT_CUTOFF = 32
DEFAULT_Q_POINTS = 512
CONVERGENCE_TOL = 1e-8


def quasi_momentum_grid(n_points: int = DEFAULT_Q_POINTS) -> np.ndarray:
    """Uniform grid on the first Brillouin zone ``[-1, 1)``."""
    return -1.0 + 2.0 * np.arange(n_points) / n_points


def _eigensystem(depth: float, q: float, cutoff: int):
    m = np.arange(-cutoff, cutoff + 1)
    diag = 0.5 * (q + 2 * m) ** 2 + 0.5 * depth
    off = np.full(2 * cutoff, 0.25 * depth)
    energies, vectors = eigh_tridiagonal(diag, off)
    return energies, _fix_phase(vectors, cutoff)


def _fix_phase(vectors: np.ndarray, cutoff: int) -> np.ndarray:
    # Column-wise sign: the lowest |m| coefficient that is not negligible is positive.
    n = vectors.shape[1]
    signs = np.ones(n)
    for j in range(n):
        col = vectors[:, j]
        for k in range(cutoff + 1):
            lo, hi = col[cutoff - k], col[cutoff + k]
            c = lo if abs(lo) >= abs(hi) else hi
            if abs(c) > 1e-8:
                signs[j] = np.sign(c)
                break
    return vectors * signs


@dataclass(frozen=True)
class BlochSolution:
    """Band energies and Bloch eigenvectors for one lattice depth.

    Attributes
    ----------
    depth : float
        Lattice depth ``U*n``.
    q_grid : ndarray, shape (n_q,)
    energies : ndarray, shape (n_bands, n_q)
        ``energies[nu - 1, i]`` is ``E_nu(q_grid[i])``.
    eigenvectors : ndarray, shape (n_bands, n_q, 2*cutoff + 1)
        Plane-wave coefficients, component ``j`` belongs to ``m = j - cutoff``.
    cutoff : int
    """

    depth: float
    q_grid: np.ndarray
    energies: np.ndarray
    eigenvectors: np.ndarray
    cutoff: int

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]

    @property
    def reciprocal_orders(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def band(self, nu: int) -> np.ndarray:
        """Energies of band ``nu`` (1-based) on the q grid."""
        self._check_band(nu)
        return self.energies[nu - 1]

    def group_velocities(self, nu: int) -> np.ndarray:
        """``dE/dq`` of band ``nu`` on the q grid (Hellmann-Feynman)."""
        self._check_band(nu)
        c2 = self.eigenvectors[nu - 1] ** 2
        p = self.q_grid[:, None] + 2.0 * self.reciprocal_orders[None, :]
        return np.sum(c2 * p, axis=1)

    def _check_band(self, nu: int):
        if not 1 <= nu <= self.n_bands:
            raise ParameterError(f"band {nu} not in solution (1..{self.n_bands})")


def _solve(depth, q_grid, n_bands, cutoff):
    energies = np.empty((n_bands, q_grid.size))
    vectors = np.empty((n_bands, q_grid.size, 2 * cutoff + 1))
    for i, q in enumerate(q_grid):
        e, v = _eigensystem(depth, q, cutoff)
        energies[:, i] = e[:n_bands]
        vectors[:, i, :] = v[:, :n_bands].T
    return energies, vectors


def _top_band_shift(depth, n_bands, cutoff, probe=(-1.0, -0.5, 0.0, 0.5)):
    shift = 0.0
    for q in probe:
        a = _eigensystem(depth, q, cutoff)[0][n_bands - 1]
        b = _eigensystem(depth, q, cutoff + 4)[0][n_bands - 1]
        shift = max(shift, abs(a - b))
    return shift


def solve_bands(depth: float, q_grid=None, n_bands: int = 5,
                cutoff: int | None = None) -> BlochSolution:
    """Diagonalize the lattice Hamiltonian on a grid of quasi-momenta.

    Parameters
    ----------
    depth : float
        Lattice depth ``U*n`` (non-negative).
    q_grid : array_like, optional
        Quasi-momenta in ``[-1, 1)``; defaults to 512 uniform points.
    n_bands : int
        Number of lowest bands kept.
    cutoff : int, optional
        Plane-wave cutoff ``|m| <= cutoff``.  When omitted, starts at 32 and
        doubles until the top band moves by less than 1e-8 between ``cutoff``
        and ``cutoff + 4``.  An explicit cutoff failing that test raises
        :class:`AccuracyError`.
    """
    if depth < 0:
        raise ParameterError(f"lattice depth must be non-negative, got {depth}")
    if n_bands < 1:
        raise ParameterError("n_bands must be at least 1")
    q_grid = quasi_momentum_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    if np.any(q_grid < -1) or np.any(q_grid >= 1):
        raise ParameterError("quasi-momenta must lie in [-1, 1)")

    if cutoff is None:
        cutoff = max(DEFAULT_CUTOFF, n_bands + 8)
        while _top_band_shift(depth, n_bands, cutoff) > CONVERGENCE_TOL:
            cutoff *= 2
            if cutoff > 4096:
                raise AccuracyError("plane-wave expansion does not converge")
    else:
        if cutoff < n_bands + 8:
            raise ParameterError(f"cutoff must be >= n_bands + 8 = {n_bands + 8}")
        shift = _top_band_shift(depth, n_bands, cutoff)
        if shift > CONVERGENCE_TOL:
            raise AccuracyError(
                f"cutoff {cutoff} too small: top band shifts by {shift:.2e} at cutoff+4")

    energies, vectors = _solve(depth, q_grid, n_bands, cutoff)
    return BlochSolution(depth=float(depth), q_grid=q_grid, energies=energies,
                         eigenvectors=vectors, cutoff=cutoff)


@dataclass(frozen=True)
class BandPoint:
    band: int
    q: float
    energy: float
    group_velocity: float
    inverse_effective_mass: float

    @property
    def effective_mass(self) -> float:
        if self.inverse_effective_mass == 0:
            return np.inf
        return 1.0 / self.inverse_effective_mass


def band_point(sol: BlochSolution, band: int, q0: float) -> BandPoint:
    """Energy, group velocity and inverse effective mass at ``q0``.

    The Hamiltonian is diagonalized at ``q0`` itself.  The first derivative
    follows from Hellmann-Feynman, ``dE/dq = <p>``, and the second from
    second-order perturbation theory,

        d2E/dq2 = 1 + 2 sum_{k != nu} |<k|p|nu>|**2 / (E_nu - E_k),

    so neither depends on the resolution of ``sol.q_grid``.
    """
    sol._check_band(band)
    if not -1.0 <= q0 < 1.0:
        raise ParameterError(f"q0={q0} outside the first Brillouin zone; fold it first")
    energies, vectors = _eigensystem(sol.depth, q0, sol.cutoff)
    p = q0 + 2.0 * sol.reciprocal_orders
    i = band - 1
    v = vectors[:, i]
    vg = float(np.sum(v * v * p))
    coupling = vectors.T @ (p * v)
    gaps = energies[i] - energies
    mask = np.abs(gaps) > 1e-12
    curvature = 1.0 + 2.0 * np.sum(coupling[mask] ** 2 / gaps[mask])
    return BandPoint(band=band, q=float(q0), energy=float(energies[i]),
                     group_velocity=vg, inverse_effective_mass=float(curvature))


@dataclass(frozen=True)
class BandDecomposition:
    """Projection of a momentum-space packet onto Bloch bands.

    ``amplitudes[nu - 1, i]`` is the overlap of the packet with the Bloch state
    of band ``nu`` at ``q_grid[i]``; ``weights[nu - 1]`` integrates its modulus
    squared over the zone.
    """

    q_grid: np.ndarray
    amplitudes: np.ndarray
    weights: np.ndarray

    @property
    def dominant_band(self) -> int:
        return int(np.argmax(self.weights)) + 1


def decompose_packet(packet, sol: BlochSolution) -> BandDecomposition:
    """Project a momentum-space packet onto every band of the plane-wave basis.

    ``packet`` must provide ``amplitude(p)`` (normalized on the real line),
    ``p0`` and ``dp``.  All ``2*cutoff + 1`` bands are used, so the weights sum
    to one up to the quadrature error of the q grid.
    """
    q = sol.q_grid
    h = 2.0 / q.size
    if not np.allclose(np.diff(q), h):
        raise ParameterError("decompose_packet needs a uniform q grid")
    if packet.dp < 2 * h:
        raise ResolutionError(
            f"q grid spacing {h:.3g} too coarse for momentum width {packet.dp:.3g}")
    pmax = 2 * sol.cutoff + 1
    tail = _gaussian_tail(packet, pmax)
    if tail > 1e-12:
        raise CutoffError(f"packet weight {tail:.2e} beyond |p| = {pmax}; raise cutoff")

    orders = sol.reciprocal_orders
    nb = orders.size
    amps = np.empty((nb, q.size), dtype=complex)
    for i, qi in enumerate(q):
        _, v = _eigensystem(sol.depth, qi, sol.cutoff)
        psi = packet.amplitude(qi + 2.0 * orders)
        amps[:, i] = v.T @ psi
    weights = h * np.sum(np.abs(amps) ** 2, axis=1)
    return BandDecomposition(q_grid=q, amplitudes=amps, weights=weights)


def _gaussian_tail(packet, pmax):
    s = np.sqrt(2.0) * packet.dp
    return 0.5 * (erfc((pmax - packet.p0) / s) + erfc((pmax + packet.p0) / s))
