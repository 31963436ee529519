"""Command-line runner: ``cavityqnd <subcommand> [--preset figN] [--set k=v] ...``.

Every run writes CSV data files (one header line, fixed column order, floats
with 17 significant digits) and a ``manifest.json`` holding the resolved
configuration, package version, seed, wall time and output list.  A manifest
can be passed back through ``--config`` to repeat the run exactly.

Randomness comes from ``numpy.random.Philox`` keyed by the run seed; cascade
``i`` of an ensemble uses seed ``seed + i``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical accuracy error,
4 I/O error.  Errors are reported on stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bloch, measurement, propagator, semianalytic
from .errors import AccuracyError, CavityQNDError, ParameterError
from .field import FieldState, alpha_grid, coherent_state, husimi_q
from .model import SimulationParams, default_fock_cutoff
from .presets import preset

log = logging.getLogger("cavityqnd")

SUBCOMMANDS = ("bands", "semianalytic", "propagate", "measure", "entropy", "qfunction")
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4

SIM_KEYS = ("p0", "dp", "dx_packet", "x0", "U", "g0", "delta", "L", "X_s", "nbar",
            "n_max", "grid", "dt", "t_f")
OPTION_DEFAULTS = {
    "seed": 0,
    # bands
    "band_photons": 1,
    "n_bands": 3,
    "q_points": bloch.DEFAULT_Q_POINTS,
    # semianalytic / entropy
    "x_points": 4001,
    "t_points": 401,
    # propagate
    "photon_numbers": None,
    "sample_every": 1.0,
    "check_boundary": True,
    # measure
    "ensemble": 1,
    "max_atoms": 50,
    "collapse_threshold": 0.99,
    "snapshots": [0, 1, 5, 10],
    "stop_at_collapse": True,
    "mode": "per_n",
    "detector_width": 0.0,
    "cache_dir": None,
    "workers": 1,
    # qfunction
    "qf_extent": 4.0,
    "qf_points": 201,
    "qf_state": "coherent",
    "qf_fock": 0,
}
REQUIRED = {
    "bands": ("U",),
    "semianalytic": ("p0", "U", "t_f"),
    "entropy": ("p0", "U", "t_f"),
    "propagate": ("p0", "t_f"),
    "measure": ("p0", "L", "t_f"),
    "qfunction": (),
}


@dataclass
class RunConfig:
    """Resolved configuration of one run.

    ``sim`` holds the keys of :class:`SimulationParams` as given by the user;
    ``options`` holds every subcommand option with defaults filled in.
    """

    subcommand: str
    sim: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "config" in d and isinstance(d["config"], dict):
            d = dict(d["config"])          # a manifest
        sub = d.pop("subcommand", None)
        if sub not in SUBCOMMANDS:
            raise ParameterError(f"subcommand must be one of {SUBCOMMANDS}, got {sub!r}")
        unknown = sorted(set(d) - set(SIM_KEYS) - set(OPTION_DEFAULTS))
        if unknown:
            raise ParameterError(f"unknown configuration keys: {unknown}")
        sim = {k: d[k] for k in SIM_KEYS if k in d and d[k] is not None}
        options = {k: d.get(k, v) for k, v in OPTION_DEFAULTS.items()}
        cfg = cls(sub, sim, options)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, **self.sim, **self.options}

    def validate(self):
        for k in REQUIRED[self.subcommand]:
            if k not in self.sim:
                raise ParameterError(f"missing required parameter: {k}")
        if self.subcommand in ("semianalytic", "entropy", "propagate", "measure"):
            if ("dp" in self.sim) == ("dx_packet" in self.sim):
                raise ParameterError("missing required parameter: give exactly one of dp and dx_packet")
        if self.subcommand in ("propagate", "measure"):
            self.simulation()          # runs every SimulationParams check
        o = self.options
        if o["mode"] not in measurement.MODES:
            raise ParameterError(f"mode must be one of {measurement.MODES}")
        if o["qf_state"] not in ("coherent", "fock"):
            raise ParameterError("qf_state must be 'coherent' or 'fock'")
        for k in ("n_bands", "q_points", "x_points", "t_points", "ensemble", "max_atoms",
                  "qf_points", "workers"):
            if not (isinstance(o[k], int) and o[k] > 0):
                raise ParameterError(f"{k} must be a positive integer")
        if not isinstance(o["seed"], int) or o["seed"] < 0:
            raise ParameterError("seed must be a non-negative integer")

    @property
    def seed(self) -> int:
        return self.options["seed"]

    @property
    def nbar(self) -> float:
        return float(self.sim.get("nbar", 4.0))

    def simulation(self) -> SimulationParams:
        try:
            return SimulationParams(**self.sim)
        except TypeError as exc:
            raise ParameterError(str(exc)) from None

    def initial_field(self, n_max: int | None = None) -> FieldState:
        n_max = self.sim.get("n_max") if n_max is None else n_max
        if n_max is None:
            n_max = default_fock_cutoff(self.nbar)
        return coherent_state(math.sqrt(self.nbar), n_max)


def parse_override(text: str):
    if "=" not in text:
        raise ParameterError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def write_csv(path: Path, columns, data) -> Path:
    """Write columns of equal length with a one-line header."""
    arr = np.column_stack([np.asarray(c, dtype=float) for c in data]) if len(data) else np.empty((0, 0))
    np.savetxt(path, arr, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
    return path


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# subcommands -----------------------------------------------------------------

def run_bands(cfg: RunConfig, out: Path) -> list[Path]:
    o = cfg.options
    depth = cfg.sim["U"] * o["band_photons"]
    q = bloch.quasi_momentum_grid(o["q_points"])
    sol = bloch.solve_bands(depth, q, n_bands=o["n_bands"])
    cols = ["q"] + [f"E_{nu}" for nu in range(1, o["n_bands"] + 1)]
    return [write_csv(out / "bands.csv", cols, [q, *sol.energies])]


def _packet_args(cfg: RunConfig):
    s = cfg.sim
    dp = s["dp"] if "dp" in s else 0.5 / s["dx_packet"]
    return float(s["p0"]), float(dp), float(s["U"])


def _entropy_csv(cfg, out, field, points):
    p0, dp, U = _packet_args(cfg)
    times = np.linspace(0.0, cfg.sim["t_f"], cfg.options["t_points"])
    S, S_max = semianalytic.entropy_trajectory(field, times, p0, dp, U, points)
    return write_csv(out / "entropy.csv", ["t", "S_f", "S_max"],
                     [times, S, np.full_like(times, S_max)])


def run_semianalytic(cfg: RunConfig, out: Path) -> list[Path]:
    p0, dp, U = _packet_args(cfg)
    field = cfg.initial_field()
    points = semianalytic.band_points(p0, U, field.n_max)
    state = semianalytic.atom_field_state(field, cfg.sim["t_f"], p0, dp, U, points)
    comps = state.components
    lo = min(c.center - 8 * c.width for c in comps)
    hi = max(c.center + 8 * c.width for c in comps)
    x = np.linspace(lo, hi, cfg.options["x_points"])
    rho = semianalytic.atomic_density(state, x)
    files = [write_csv(out / "density.csv", ["x", "rho_at"], [x, rho])]
    files.append(write_csv(
        out / "components.csv",
        ["n", "probability", "center", "width", "v_g", "inverse_mass"],
        [np.arange(len(comps)), field.probabilities, [c.center for c in comps],
         [c.width for c in comps], [c.v_g for c in comps], [c.inverse_mass for c in comps]]))
    files.append(_entropy_csv(cfg, out, field, points))
    return files


def run_entropy(cfg: RunConfig, out: Path) -> list[Path]:
    p0, dp, U = _packet_args(cfg)
    field = cfg.initial_field()
    return [_entropy_csv(cfg, out, field, semianalytic.band_points(p0, U, field.n_max))]


def run_propagate(cfg: RunConfig, out: Path) -> list[Path]:
    params = cfg.simulation()
    o = cfg.options
    ns = o["photon_numbers"]
    ns = list(range(params.n_max + 1)) if ns is None else [int(n) for n in ns]
    field = cfg.initial_field(params.n_max)
    if max(ns) > params.n_max:
        raise ParameterError(f"photon number {max(ns)} exceeds n_max={params.n_max}")
    grid = params.grid
    psi0 = propagator.gaussian_packet(grid, params.x0, params.p0, params.dx_packet)
    weights = field.probabilities[ns]
    weights = weights / weights.sum()
    rho = np.zeros(grid.n_points)
    traj_rows, tof_rows = [], []
    for w, n in zip(weights, ns):
        V = propagator.EnvelopePotential(params.U, n, params.L, params.X_s)
        psi, traj = propagator.propagate(psi0, V, params.t_f, params.dt, o["sample_every"],
                                         check_boundary=o["check_boundary"])
        log.info("n=%d propagated", n)
        rho += w * psi.density
        arr = traj.as_array()
        traj_rows.append(np.column_stack([np.full(len(arr), n), arr]))
        if params.L is not None:
            try:
                tof = propagator.time_of_flight(traj, params.L)
                tof_rows.append([n, tof.tau, tof.velocity, tof.t_enter, tof.t_exit])
            except AccuracyError as exc:
                log.warning("n=%d: no time of flight (%s)", n, exc)
                tof_rows.append([n] + [math.nan] * 4)
    files = [write_csv(out / "density.csv", ["x", "rho"], [grid.x, rho])]
    traj_all = np.vstack(traj_rows)
    files.append(write_csv(out / "trajectory.csv", ["n", *propagator.TrajectoryLog.COLUMNS],
                           list(traj_all.T)))
    if tof_rows:
        files.append(write_csv(out / "time_of_flight.csv",
                               ["n", "tau", "velocity", "t_enter", "t_exit"],
                               list(np.array(tof_rows, dtype=float).T)))
    return files


def _q_rows(label, state, re, im, alpha):
    q = husimi_q(state, alpha)
    A_re, A_im = np.meshgrid(re, im)
    return np.column_stack([np.full(q.size, label), A_re.ravel(), A_im.ravel(), q.ravel()])


def run_measure(cfg: RunConfig, out: Path) -> list[Path]:
    params = cfg.simulation()
    o = cfg.options
    comps = measurement.build_components(params, cache_dir=o["cache_dir"],
                                         workers=o["workers"], mode=o["mode"])
    comps = comps.with_detector_width(float(o["detector_width"]))
    field = cfg.initial_field(params.n_max)
    files = [write_csv(out / "components.csv", ["n", "transmission"],
                       [np.arange(comps.n_max + 1), comps.transmission])]
    seeds = [cfg.seed + i for i in range(o["ensemble"])]
    cascades = measurement.run_ensemble(
        comps, field, seeds, max_atoms=o["max_atoms"],
        collapse_threshold=o["collapse_threshold"], snapshot_atoms=tuple(o["snapshots"]),
        stop_at_collapse=o["stop_at_collapse"])
    rows = []
    for i, c in enumerate(cascades):
        for r in c.records:
            rows.append([i, r.atom_index, r.x_r, *r.probabilities, r.max_n, int(r.collapsed)])
    n_cols = [f"P_{n}" for n in range(comps.n_max + 1)]
    data = np.array(rows, dtype=float).reshape(-1, 5 + len(n_cols))
    files.append(write_csv(out / "cascades.csv", ["cascade", "j", "x_r", *n_cols, "max_n", "collapsed"],
                           list(data.T)))
    summary = [[i, s, c.atoms_to_collapse if c.collapsed else math.nan,
                c.collapsed_n if c.collapsed else math.nan, len(c.records)]
               for i, (s, c) in enumerate(zip(seeds, cascades))]
    files.append(write_csv(out / "summary.csv",
                           ["cascade", "seed", "atoms_to_collapse", "collapsed_n", "atoms"],
                           list(np.array(summary, dtype=float).T)))
    if o["snapshots"] and o["ensemble"] == 1:
        re, im, alpha = alpha_grid(o["qf_extent"], o["qf_points"])
        snaps = cascades[0].snapshots
        snap_rows = [[j, n, a.real, a.imag] for j in sorted(snaps)
                     for n, a in enumerate(snaps[j].amplitudes)]
        files.append(write_csv(out / "snapshots.csv", ["atoms", "n", "c_re", "c_im"],
                               list(np.array(snap_rows).T)))
        q = np.vstack([_q_rows(j, snaps[j], re, im, alpha) for j in sorted(snaps)])
        files.append(write_csv(out / "qfunction.csv", ["atoms", "re", "im", "Q"], list(q.T)))
    return files


def run_qfunction(cfg: RunConfig, out: Path) -> list[Path]:
    o = cfg.options
    if o["qf_state"] == "coherent":
        state = cfg.initial_field()
    else:
        n_max = max(int(o["qf_fock"]), int(cfg.sim.get("n_max") or 0))
        state = FieldState.fock(int(o["qf_fock"]), n_max)
    re, im, alpha = alpha_grid(o["qf_extent"], o["qf_points"])
    q = _q_rows(0, state, re, im, alpha)[:, 1:]
    return [write_csv(out / "qfunction.csv", ["re", "im", "Q"], list(q.T))]


RUNNERS = {
    "bands": run_bands,
    "semianalytic": run_semianalytic,
    "propagate": run_propagate,
    "measure": run_measure,
    "entropy": run_entropy,
    "qfunction": run_qfunction,
}


def execute(cfg: RunConfig, out: Path) -> dict:
    """Run one configuration into ``out`` and write its manifest."""
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files = RUNNERS[cfg.subcommand](cfg, out)
    manifest = {
        "subcommand": cfg.subcommand,
        "config": cfg.to_dict(),
        "version": package_version(),
        "seed": cfg.seed,
        "rng": "numpy.random.Philox",
        "wall_time_s": time.perf_counter() - start,
        "outputs": [p.name for p in files],
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest


def build_configs(subcommand, config_path=None, preset_id=None, overrides=(), seed=None):
    """Resolve the configurations of a run: ``[(subdir, RunConfig), ...]``."""
    bases = [("", {})]
    if preset_id is not None:
        p = preset(preset_id)
        if isinstance(p, list):
            bases = [(f"{preset_id}{s}", d) for s, d in zip("abc", p)]
        else:
            bases = [("", p)]
    if config_path is not None:
        with open(config_path) as f:
            loaded = json.load(f)
        if isinstance(loaded.get("config"), dict):
            loaded = loaded["config"]
        bases = [(sub, {**d, **loaded}) for sub, d in bases]
    sets = dict(parse_override(s) for s in overrides)
    configs = []
    for sub, d in bases:
        d = {**d, **sets}
        if subcommand is not None:
            if d.get("subcommand", subcommand) != subcommand and preset_id is not None:
                raise ParameterError(
                    f"preset {preset_id} is a {d['subcommand']!r} run, not {subcommand!r}")
            d["subcommand"] = subcommand
        if seed is not None:
            d["seed"] = seed
        configs.append((sub, RunConfig.from_dict(d)))
    return configs


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityqnd",
        description="QND photon counting with atoms scattered off a cavity field mode.")
    parser.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS,
                        help="quantity to compute (taken from the preset or config if omitted)")
    parser.add_argument("--config", type=Path, help="JSON config or a previous run's manifest")
    parser.add_argument("--preset", help="published parameter set: fig1 ... fig7")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one key (JSON value); repeatable")
    parser.add_argument("--seed", type=int, help="master seed of the Philox generator")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        configs = build_configs(args.subcommand, args.config, args.preset,
                                args.overrides, args.seed)
        for sub, cfg in configs:
            out = args.out / sub if sub else args.out
            m = execute(cfg, out)
            log.info("%s -> %s (%.1f s)", cfg.subcommand, out, m["wall_time_s"])
    except ParameterError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except json.JSONDecodeError as exc:
        return _fail("config", f"invalid JSON config: {exc}", EXIT_CONFIG)
    except AccuracyError as exc:
        return _fail("numerical", f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except CavityQNDError as exc:
        return _fail(exc.category, str(exc), EXIT_CONFIG)
    return 0


if __name__ == "__main__":
    sys.exit(main())
