"""Repeated atomic detections acting as a photon-number filter.

Every atom leaves the cavity in the state ``sum_n c_n psi_n(x) |n>``.  The
per-photon-number wave packets ``psi_n`` do not depend on the field, so they
are propagated once (:func:`build_components`) and reused for every atom.
A detection at ``x_r`` multiplies ``c_n`` by ``psi_n'(x_r)`` and renormalizes.

Randomness comes only from :func:`make_rng`, a numpy ``Generator`` driven by
the counter-based Philox4x64-10 bit generator keyed with the integer seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ParameterError, ZeroLikelihoodError
from .field import FieldState, shannon_entropy
from .model import SimulationParams
from .propagator import (NO_SIGNAL_TOL, EnvelopePotential, gaussian_packet,
                         propagate)

log = logging.getLogger(__name__)

CACHE_VERSION = 1
MODES = ("per_n", "joint")


def make_rng(seed: int) -> np.random.Generator:
    """Philox-based generator; identical streams on every platform."""
    return np.random.Generator(np.random.Philox(int(seed)))


def trapezoid_weights(n: int, dx: float) -> np.ndarray:
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


@dataclass
class MeasurementComponents:
    """Forward wave packets of every photon number on the detection region.

    Attributes
    ----------
    x : ndarray, shape (M,)
        Uniform detection grid starting at the first grid point ``>= L/2``.
    psi : ndarray, shape (n_max + 1, M)
        Per-``n`` renormalized forward amplitudes ``psi_n'``; rows of
        photon numbers with no transmitted signal are zero.
    transmission : ndarray, shape (n_max + 1,)
        Forward probability of each photon number before renormalization.
    mode : {"per_n", "joint"}
        ``per_n`` uses ``|psi_n'|**2`` as the likelihood of a detection at
        ``x``; ``joint`` weights it by the transmission, i.e. uses the raw
        forward amplitudes.
    """

    x: np.ndarray
    psi: np.ndarray
    transmission: np.ndarray
    mode: str = "per_n"
    logs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.psi.shape != (self.transmission.size, self.x.size):
            raise ParameterError("component array shapes disagree")

    @property
    def n_max(self) -> int:
        return self.transmission.size - 1

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.x.size, self.spacing)

    @property
    def dark(self) -> np.ndarray:
        """Photon numbers whose forward probability is below the no-signal threshold."""
        return self.transmission < NO_SIGNAL_TOL

    def with_mode(self, mode: str) -> "MeasurementComponents":
        return MeasurementComponents(self.x, self.psi, self.transmission, mode, self.logs)

    def likelihood(self) -> np.ndarray:
        """Detection likelihood ``l_n(x)`` for every photon number, shape (n, M)."""
        lik = np.abs(self.psi) ** 2
        if self.mode == "joint":
            lik = lik * self.transmission[:, None]
        return lik

    def amplitude_at(self, x_r: float) -> np.ndarray:
        """Filter factors ``psi_n(x_r)``.

        The modulus is the square root of the linearly interpolated
        likelihood (the same piecewise-linear density that is sampled), the
        phase that of the linearly interpolated amplitude.
        """
        if not self.x[0] <= x_r <= self.x[-1]:
            raise ParameterError(f"x_r={x_r} outside the detection region")
        i = min(int((x_r - self.x[0]) / self.spacing), self.x.size - 2)
        f = (x_r - self.x[i]) / self.spacing
        lik = self.likelihood()
        mag = np.sqrt(np.maximum((1 - f) * lik[:, i] + f * lik[:, i + 1], 0.0))
        z = (1 - f) * self.psi[:, i] + f * self.psi[:, i + 1]
        phase = np.where(np.abs(z) > 0, z / np.where(np.abs(z) > 0, np.abs(z), 1.0), 1.0)
        return mag * phase

    def with_detector_width(self, width: float) -> "MeasurementComponents":
        """Components seen by a detector with Gaussian resolution ``width``.

        Each likelihood row is convolved with the detector response and
        renormalized on the detection grid; phases are kept.  ``width = 0``
        is the ideal point detector.
        """
        if width < 0:
            raise ParameterError("detector width must be non-negative")
        if width == 0:
            return self
        lik = gaussian_filter1d(np.abs(self.psi) ** 2, width / self.spacing, axis=1,
                                mode="constant")
        mass = lik @ self.weights
        lit = mass > 0
        lik[lit] /= mass[lit, None]
        phase = np.exp(1j * np.angle(self.psi))
        return MeasurementComponents(self.x, np.sqrt(lik) * phase, self.transmission,
                                     self.mode, self.logs)

    def save(self, path) -> None:
        np.savez_compressed(path, x=self.x, psi=self.psi, transmission=self.transmission)

    @classmethod
    def load(cls, path, mode: str = "per_n") -> "MeasurementComponents":
        with np.load(path) as f:
            return cls(f["x"], f["psi"], f["transmission"], mode)


def _cache_key(params: SimulationParams, n: int) -> str:
    keys = ("p0", "dx_packet", "x0", "U", "L", "X_s", "dt", "t_f")
    d = {k: getattr(params, k) for k in keys}
    d["grid"] = params.grid.to_dict()
    d["n"] = n
    d["version"] = CACHE_VERSION
    blob = json.dumps(d, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def propagate_component(params: SimulationParams, n: int, sample_every: float = 1.0):
    """Propagate the ``n``-photon wave packet to ``params.t_f``.

    Returns ``(x, amplitude, transmission, log_array)`` restricted to the
    detection region ``x >= L/2``; the amplitude is renormalized there with
    the trapezoid rule, or zero when nothing was transmitted.
    """
    if params.L is None:
        raise ParameterError("measurement components need a finite cavity length L")
    grid = params.grid
    psi0 = gaussian_packet(grid, params.x0, params.p0, params.dx_packet)
    V = EnvelopePotential(params.U, n, params.L, params.X_s)
    psi, traj = propagate(psi0, V, params.t_f, params.dt, sample_every)
    mask = grid.x >= params.L / 2
    x = grid.x[mask]
    amp = psi.values[mask]
    w = trapezoid_weights(x.size, grid.spacing)
    mass = float(np.sum(w * np.abs(amp) ** 2))
    if mass < NO_SIGNAL_TOL:
        amp = np.zeros_like(amp)
    else:
        amp = amp / math.sqrt(mass)
    return x, amp, mass, traj.as_array()


def _component_task(args):
    params, n, cache_dir = args
    if cache_dir is not None:
        path = Path(cache_dir) / f"component-{_cache_key(params, n)}.npz"
        if path.exists():
            with np.load(path) as f:
                return n, f["x"], f["psi"], float(f["transmission"]), f["log"]
    x, amp, mass, traj = propagate_component(params, n)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez_compressed(tmp, x=x, psi=amp, transmission=mass, log=traj)
        tmp.replace(path)
    return n, x, amp, mass, traj


def build_components(params: SimulationParams, n_max: int | None = None,
                     cache_dir=None, workers: int = 1,
                     mode: str = "per_n") -> MeasurementComponents:
    """Propagate and forward-renormalize the packet for ``n = 0..n_max``.

    Results are cached per photon number under ``cache_dir`` (if given), keyed
    by a hash of every parameter the propagation depends on.
    """
    n_max = params.n_max if n_max is None else n_max
    tasks = [(params, n, cache_dir) for n in range(n_max + 1)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_component_task, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_component_task(t))
            log.info("component n=%d done (transmission %.3g)", t[1], results[-1][3])
    results.sort(key=lambda r: r[0])
    x = results[0][1]
    psi = np.stack([r[2] for r in results])
    trans = np.array([r[3] for r in results])
    logs = {r[0]: r[4] for r in results}
    return MeasurementComponents(x, psi, trans, mode, logs)


def detection_density(components: MeasurementComponents, field: FieldState) -> np.ndarray:
    """``rho'(x) = sum_n |c_n|**2 l_n(x)``, normalized on the detection grid."""
    p = _prior(components, field)
    rho = p @ components.likelihood()
    total = float(np.sum(components.weights * rho))
    if not total > 0:
        raise ZeroLikelihoodError("no photon number with nonzero weight reaches the detector")
    return rho / total


def _prior(components, field):
    if field.n_max != components.n_max:
        raise ParameterError(
            f"field cutoff {field.n_max} differs from component cutoff {components.n_max}")
    return field.probabilities


def sample_position(x: np.ndarray, density: np.ndarray, rng: np.random.Generator) -> float:
    """Draw from the piecewise-linear density through the grid values.

    A cell is chosen with probability equal to its trapezoid mass and the
    position inside it by inverting the quadratic cumulative distribution.
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(density, dtype=float)
    if x.size < 2 or rho.shape != x.shape:
        raise ParameterError("density and grid must be arrays of equal length >= 2")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ParameterError("density must be finite and non-negative")
    h = np.diff(x)
    cell = 0.5 * (rho[:-1] + rho[1:]) * h
    cum = np.cumsum(cell)
    total = cum[-1]
    if not total > 0:
        raise ParameterError("degenerate density: zero total mass")
    u = rng.random() * total
    i = min(int(np.searchsorted(cum, u, side="right")), cell.size - 1)
    r = u - (cum[i - 1] if i > 0 else 0.0)
    a, b, hi = rho[i], rho[i + 1], h[i]
    # solve a*t + (b - a)*t**2/(2*hi) = r on [0, hi]
    disc = max(a * a + 2.0 * (b - a) * r / hi, 0.0)
    denom = a + math.sqrt(disc)
    t = 2.0 * r / denom if denom > 0 else 0.0
    return float(x[i] + min(max(t, 0.0), hi))


def filter_update(field: FieldState, components: MeasurementComponents,
                  x_r: float) -> FieldState:
    """Posterior field after detecting an atom at ``x_r``."""
    _prior(components, field)
    factors = components.amplitude_at(x_r)
    c = field.amplitudes * factors
    norm = float(np.sum(np.abs(c) ** 2))
    if not norm > 0:
        raise ZeroLikelihoodError(f"outcome x_r={x_r} has zero likelihood for every n")
    return FieldState(c / math.sqrt(norm))


def posterior_on_grid(components: MeasurementComponents, field: FieldState) -> np.ndarray:
    """Posterior photon distribution for an outcome at every grid point, shape (n, M).

    Where the detection density vanishes the prior is returned.
    """
    p = _prior(components, field)
    joint = p[:, None] * components.likelihood()
    tot = joint.sum(axis=0)
    safe = tot > 0
    post = np.repeat(p[:, None], components.x.size, axis=1)
    post[:, safe] = joint[:, safe] / tot[safe]
    return post


def expected_posterior(components: MeasurementComponents, field: FieldState) -> np.ndarray:
    """``integral rho'(x) P(n | x) dx`` by the trapezoid rule on the detection grid."""
    rho = detection_density(components, field)
    post = posterior_on_grid(components, field)
    return post @ (components.weights * rho)


def expected_posterior_entropy(components: MeasurementComponents, field: FieldState) -> float:
    rho = detection_density(components, field)
    post = posterior_on_grid(components, field)
    p = np.where(post > 0, post, 1.0)
    h = -np.sum(post * np.log(p), axis=0)
    return float(np.sum(components.weights * rho * h))


@dataclass(frozen=True)
class CascadeRecord:
    atom_index: int
    x_r: float
    probabilities: np.ndarray
    amplitudes: np.ndarray
    collapsed: bool

    @property
    def max_n(self) -> int:
        return int(np.argmax(self.probabilities))


@dataclass
class Cascade:
    initial: FieldState
    records: list
    snapshots: dict
    threshold: float

    @property
    def final_state(self) -> FieldState:
        if self.records:
            return FieldState(self.records[-1].amplitudes)
        return self.initial

    @property
    def collapsed(self) -> bool:
        return bool(self.final_state.probabilities.max() > self.threshold)

    @property
    def atoms_to_collapse(self) -> int | None:
        if self.initial.probabilities.max() > self.threshold:
            return 0
        for r in self.records:
            if r.collapsed:
                return r.atom_index
        return None

    @property
    def collapsed_n(self) -> int | None:
        if not self.collapsed:
            return None
        return int(np.argmax(self.final_state.probabilities))


def run_cascade(components: MeasurementComponents, field0: FieldState,
                rng: np.random.Generator, max_atoms: int = 50,
                collapse_threshold: float = 0.99, snapshot_atoms=(0, 1, 5, 10),
                stop_at_collapse: bool = True) -> Cascade:
    """Detect atoms one after another, updating the field after each.

    Stops once ``max |c_n|**2 > collapse_threshold`` (unless
    ``stop_at_collapse`` is false) or after ``max_atoms`` atoms.  The field is
    stored in ``snapshots`` after each atom count listed in ``snapshot_atoms``.
    """
    if not 0 < collapse_threshold < 1:
        raise ParameterError("collapse_threshold must lie in (0, 1)")
    state = field0
    snaps = {0: field0} if 0 in snapshot_atoms else {}
    records = []
    if stop_at_collapse and field0.probabilities.max() > collapse_threshold:
        return Cascade(field0, records, snaps, collapse_threshold)
    for j in range(1, max_atoms + 1):
        rho = detection_density(components, state)
        x_r = sample_position(components.x, rho, rng)
        state = filter_update(state, components, x_r)
        collapsed = bool(state.probabilities.max() > collapse_threshold)
        records.append(CascadeRecord(j, x_r, state.probabilities, state.amplitudes, collapsed))
        if j in snapshot_atoms:
            snaps[j] = state
        if collapsed and stop_at_collapse:
            break
    return Cascade(field0, records, snaps, collapse_threshold)


def run_ensemble(components: MeasurementComponents, field0: FieldState, seeds,
                 **kwargs) -> list[Cascade]:
    """Independent cascades, one per seed, in seed order."""
    return [run_cascade(components, field0, make_rng(s), **kwargs) for s in seeds]


def posterior_entropies(cascade: Cascade) -> np.ndarray:
    """Shannon entropy of the photon distribution after each atom."""
    return np.array([shannon_entropy(r.probabilities) for r in cascade.records])
