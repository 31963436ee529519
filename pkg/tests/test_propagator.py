import numpy as np
import pytest

from cavityqnd.errors import BoundaryLeakError, NoSignalError, ParameterError
from cavityqnd.model import GridSpec
from cavityqnd.propagator import (EnvelopePotential, TrajectoryLog, energy, forward_renormalize,
                                  free_gaussian, gaussian_packet, propagate,
                                  propagate_two_level, split_step, time_of_flight)

from conftest import cavity_components

GRID = GridSpec(-200.0, 200.0, 8192)


def test_gaussian_packet_moments():
    psi = gaussian_packet(GRID, -20.0, 1.5, 4.0)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.mean_x() == pytest.approx(-20.0, abs=1e-10)
    assert psi.mean_p() == pytest.approx(1.5, abs=1e-10)
    # <p^2>/2 = (p0^2 + dp^2)/2 with dp = 1/(2 dx)
    assert psi.kinetic_energy() == pytest.approx(0.5 * (1.5**2 + 1 / 64), rel=1e-10)


def test_free_propagation_matches_analytic():
    psi0 = gaussian_packet(GRID, -50.0, 2.0, 5.0)
    psi, log = propagate(psi0, 0.0, 40.0, dt=0.05)
    ref = free_gaussian(GRID, -50.0, 2.0, 5.0, 40.0)
    err = np.sqrt(GRID.spacing * np.sum(np.abs(psi.values - ref.values) ** 2))
    assert err < 1e-10
    assert log.mean_x[-1] == pytest.approx(30.0, abs=1e-8)


def test_norm_and_energy_conserved_in_lattice():
    V = EnvelopePotential(0.7, 4)
    psi0 = gaussian_packet(GRID, 0.0, 3.75, 10.0)
    e0 = energy(psi0, V)
    psi, log = propagate(psi0, V, 20.0, dt=0.005)
    assert abs(psi.norm() - 1.0) < 1e-11
    assert abs(energy(psi, V) / e0 - 1.0) < 1e-6
    assert np.ptp(log.norm) < 1e-11


def test_split_step_is_unitary():
    V = EnvelopePotential(1.0, 2, 100.0, 0.2)
    psi = gaussian_packet(GRID, -60.0, 3.0, 5.0)
    assert split_step(psi, V, 0.01).norm() == pytest.approx(1.0, abs=1e-13)


def test_envelope_potential():
    V = EnvelopePotential(0.7, 3, 200.0, 0.2)
    x = np.array([0.0, np.pi / 2, 150.0, -150.0, 100.0])
    v = V(x)
    assert v[0] == pytest.approx(2.1)
    assert v[1] == pytest.approx(0.0, abs=1e-15)
    assert v[2] == pytest.approx(0.0, abs=1e-15) and v[3] == pytest.approx(0.0, abs=1e-15)
    assert V.envelope(100.0) == pytest.approx(0.5)
    assert V.forward_cut == pytest.approx(-102.0)
    assert EnvelopePotential(0.7, 3)(np.array([np.pi])) == pytest.approx(2.1)
    with pytest.raises(ParameterError):
        EnvelopePotential(0.7, -1)


def test_boundary_leak_detected():
    g = GridSpec(-50.0, 50.0, 2048)
    psi0 = gaussian_packet(g, 0.0, 3.0, 3.0)
    with pytest.raises(BoundaryLeakError):
        propagate(psi0, 0.0, 30.0, dt=0.05)
    propagate(psi0, 0.0, 30.0, dt=0.05, check_boundary=False)


def test_time_grid_must_divide():
    psi0 = gaussian_packet(GRID, 0.0, 1.0, 5.0)
    with pytest.raises(ParameterError):
        propagate(psi0, 0.0, 1.005, dt=0.01)


def test_trajectory_log_columns():
    psi0 = gaussian_packet(GRID, 0.0, 1.0, 5.0)
    _, log = propagate(psi0, 0.0, 2.0, dt=0.01, sample_every=0.5, forward_cut=10.0)
    arr = log.as_array()
    assert arr.shape == (5, len(TrajectoryLog.COLUMNS))
    assert arr[:, 0] == pytest.approx([0, 0.5, 1, 1.5, 2])
    assert arr[:, 2] == pytest.approx(1.0, abs=1e-10)
    assert np.all(arr[:, 4] < 0.1)


def test_forward_renormalize():
    psi = gaussian_packet(GRID, 30.0, 1.0, 5.0)
    rho = forward_renormalize(psi, cut=25.0)
    assert GRID.spacing * rho.sum() == pytest.approx(1.0)
    assert np.all(rho[GRID.x < 25.0] == 0)
    assert forward_renormalize(psi.density, GRID, cut=25.0) == pytest.approx(rho)
    with pytest.raises(NoSignalError):
        forward_renormalize(psi, cut=150.0)
    with pytest.raises(ParameterError):
        forward_renormalize(psi.density)


def test_two_level_weak_coupling():
    g = GridSpec(-100.0, 100.0, 4096)
    psi0 = gaussian_packet(g, -40.0, 3.0, 4.0)
    r = propagate_two_level(psi0, 2, 10.0, 400.0, 63.0, 0.2, 4.0, dt=0.0025)
    total = r.ground.norm() + r.excited.norm()
    assert total == pytest.approx(1.0, abs=1e-12)
    bound = 4 * (10.0 * np.sqrt(2) / 400.0) ** 2
    assert r.excited_population.max() <= bound
    with pytest.raises(ParameterError):
        propagate_two_level(psi0, 2, 10.0, 400.0, 63.0, 0.2, 1.0, initial="x")


def test_time_of_flight_vacuum_is_free():
    _, comps = cavity_components(200.0)
    tof = time_of_flight(TrajectoryLog.from_array(comps.logs[0], -102.0), 200.0)
    assert tof.velocity == pytest.approx(3.75, rel=2e-3)


def test_time_of_flight_slower_with_photons():
    _, comps = cavity_components(200.0)
    v = [time_of_flight(TrajectoryLog.from_array(comps.logs[n], -102.0), 200.0).velocity for n in range(5)]
    assert np.all(np.diff(v) < 0)

