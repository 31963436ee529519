"""Cavity field states in a truncated Fock basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CutoffError, ParameterError
from .model import FOCK_TAIL, default_fock_cutoff

NORM_TOL = 1e-10


@dataclass(frozen=True)
class FieldState:
    """Pure field state ``sum_n c_n |n>`` for ``n = 0..n_max``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.amplitudes, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ParameterError("amplitudes must be a non-empty vector")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(f"field state not normalized: sum |c_n|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", c)

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "FieldState":
        c = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(c) ** 2))
        if norm == 0:
            raise ParameterError("cannot normalize the zero vector")
        return cls(c / norm)

    @classmethod
    def fock(cls, n: int, n_max: int) -> "FieldState":
        if not 0 <= n <= n_max:
            raise ParameterError(f"Fock number {n} outside 0..{n_max}")
        c = np.zeros(n_max + 1, dtype=complex)
        c[n] = 1.0
        return cls(c)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.amplitudes.size), self.probabilities))

    @property
    def photon_number_variance(self) -> float:
        n = np.arange(self.amplitudes.size)
        p = self.probabilities
        return float(np.dot(n * n, p) - np.dot(n, p) ** 2)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))


def coherent_state(alpha: complex, n_max: int | None = None) -> FieldState:
    """Coherent state truncated at ``n_max`` and renormalized.

    Raises :class:`CutoffError` if the discarded weight exceeds 1e-8.  Without
    ``n_max`` the smallest admissible cutoff is used.
    """
    nbar = abs(alpha) ** 2
    if n_max is None:
        n_max = default_fock_cutoff(nbar)
    n = np.arange(n_max + 1)
    if alpha == 0:
        c = (n == 0).astype(complex)
    else:
        logmag = -0.5 * nbar + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        c = np.exp(logmag) * np.exp(1j * np.angle(alpha) * n)
    kept = float(np.sum(np.abs(c) ** 2))
    if 1.0 - kept >= FOCK_TAIL:
        raise CutoffError(
            f"n_max={n_max} keeps only {kept:.10f} of the coherent state |alpha|^2={nbar:g}")
    return FieldState(c / np.sqrt(kept))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """``-Tr rho ln rho`` with ``0 ln 0 = 0``.

    Eigenvalues down to ``-1e-10`` are treated as round-off and clamped to 0.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ParameterError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise ParameterError(f"density matrix trace {tr!r} deviates from 1")
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -1e-10:
        raise ParameterError(f"density matrix has eigenvalue {lam.min():.3e} < 0")
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def alpha_grid(extent: float = 4.0, points: int = 201):
    """Square grid of coherent amplitudes ``Re, Im in [-extent, extent]``.

    Returns ``(re, im, alpha)`` with ``alpha[i, j] = re[j] + 1j*im[i]``.
    """
    re = np.linspace(-extent, extent, points)
    im = np.linspace(-extent, extent, points)
    return re, im, re[None, :] + 1j * im[:, None]


def husimi_q(state: FieldState, alpha) -> np.ndarray:
    """``Q(alpha) = |<alpha|phi>|**2 / pi`` at every point of ``alpha``."""
    alpha = np.asarray(alpha, dtype=complex)
    ac = np.conj(alpha)
    # <alpha|phi> = exp(-|alpha|^2/2) sum_n c_n conj(alpha)^n / sqrt(n!)
    term = np.ones_like(ac)
    total = state.amplitudes[0] * term
    for n in range(1, state.amplitudes.size):
        term = term * ac / np.sqrt(n)
        total = total + state.amplitudes[n] * term
    return np.abs(total) ** 2 * np.exp(-np.abs(alpha) ** 2) / np.pi


def q_function_norm(re: np.ndarray, im: np.ndarray, q: np.ndarray) -> float:
    """Trapezoid integral of ``Q`` over the grid from :func:`alpha_grid`."""
    return float(np.trapezoid(np.trapezoid(q, re, axis=1), im))
