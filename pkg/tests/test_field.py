import numpy as np
import pytest
from scipy import stats

from cavityqnd.errors import CutoffError, ParameterError
from cavityqnd.field import (FieldState, alpha_grid, coherent_state, husimi_q,
                             q_function_norm, shannon_entropy, von_neumann_entropy)


def test_coherent_state_matches_poisson():
    c = coherent_state(2.0)
    assert c.n_max == 20
    assert c.probabilities == pytest.approx(stats.poisson.pmf(np.arange(21), 4.0), abs=1e-9)
    assert c.mean_photon_number == pytest.approx(4.0, abs=1e-6)
    assert c.photon_number_variance == pytest.approx(4.0, abs=1e-5)


def test_coherent_state_phase_and_cutoff():
    c = coherent_state(2j, 20)
    assert np.angle(c.amplitudes[1]) == pytest.approx(np.pi / 2)
    with pytest.raises(CutoffError):
        coherent_state(2.0, 10)


def test_field_state_validation():
    with pytest.raises(ParameterError):
        FieldState(np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        FieldState.from_unnormalized(np.zeros(3))
    s = FieldState.from_unnormalized([1.0, 1.0])
    assert s.probabilities == pytest.approx([0.5, 0.5])
    with pytest.raises(ParameterError):
        FieldState.fock(5, 3)


def test_von_neumann_entropy():
    assert von_neumann_entropy(coherent_state(2.0).density_matrix()) == pytest.approx(0, abs=1e-10)
    rho = np.diag([0.5, 0.25, 0.25])
    assert von_neumann_entropy(rho) == pytest.approx(1.5 * np.log(2))
    with pytest.raises(ParameterError):
        von_neumann_entropy(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ParameterError):
        von_neumann_entropy(np.diag([0.6, 0.6]))
    with pytest.raises(ParameterError):
        von_neumann_entropy(np.diag([1.5, -0.5]))


def test_shannon_entropy_of_poisson():
    p = stats.poisson.pmf(np.arange(60), 4.0)
    assert shannon_entropy(p) == pytest.approx(stats.poisson(4.0).entropy(), abs=1e-12)


def test_husimi_coherent_is_gaussian():
    re, im, alpha = alpha_grid()
    q = husimi_q(coherent_state(2.0, 40), alpha)
    assert q == pytest.approx(np.exp(-np.abs(alpha - 2) ** 2) / np.pi, abs=1e-12)
    i, j = np.unravel_index(np.argmax(q), q.shape)
    assert (re[j], im[i]) == pytest.approx((2.0, 0.0))


@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_husimi_fock_ring(n):
    re, im, alpha = alpha_grid(8.0, 401)
    q = husimi_q(FieldState.fock(n, 10), alpha)
    r = np.abs(alpha)
    from math import factorial
    assert q == pytest.approx(r ** (2 * n) * np.exp(-r**2) / (np.pi * factorial(n)), abs=1e-12)
    assert q_function_norm(re, im, q) == pytest.approx(1.0, abs=1e-8)


def test_q_norm_default_grid_truncates_tail():
    re, im, alpha = alpha_grid()
    qn = q_function_norm(re, im, husimi_q(coherent_state(2.0), alpha))
    assert 0.99 < qn < 1.0
