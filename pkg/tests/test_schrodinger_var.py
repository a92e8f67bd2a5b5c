import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opticqm.grid import Grid, ScalarField
from opticqm.schrodinger_var import (MinimizationError, Potential, VariationalState,
                                     discrete_ground_energy, functional_J, hamiltonian,
                                     hj_integral_identity, minimize, norm2, sine_guess,
                                     tise_residual)

PI2 = np.pi**2


@pytest.fixture(scope="module")
def box_state():
    pot = Potential.box()
    g = pot.grid(1 / 256)
    return pot, minimize(pot, sine_guess(g))


@pytest.fixture(scope="module")
def oscillator_state():
    pot = Potential.harmonic()
    g = pot.grid(1 / 32)
    return pot, minimize(pot, sine_guess(g))


def root2_sine(h):
    g = Grid.box([0.0], [1.0], [int(round(1 / h)) + 1])
    return ScalarField(g, np.sqrt(2) * np.sin(np.pi * g.mesh()[0]))


# ---------------------------------------------------------- functional

def test_functional_vanishes_for_box_eigenfunction():
    assert abs(functional_J(root2_sine(1 / 4096), Potential.box(), PI2 / 2)) < 1e-6


def test_functional_at_zero_energy():
    J = functional_J(root2_sine(1 / 1024), Potential.box(), 0.0)
    assert J == pytest.approx(PI2 / 2, rel=1e-5)


def test_zero_wavefunction_flags_normalisation():
    g = Grid.box([0.0], [1.0], [65])
    psi = ScalarField(g, 0.0)
    assert functional_J(psi, Potential.box(), 1.0) == 0.0
    with pytest.raises(ValueError, match="normalization"):
        functional_J(psi, Potential.box(), 1.0, check_norm=True)


def test_complex_wavefunction_rejected():
    g = Grid.box([0.0], [1.0], [9])
    with pytest.raises(ValueError):
        functional_J(ScalarField(g, 1j * np.ones(9)), Potential.box(), 1.0)


# --------------------------------------------------------- minimisation

def test_box_ground_energy(box_state):
    pot, s = box_state
    assert s.converged
    assert s.E == pytest.approx(PI2 / 2, rel=5e-3)
    assert tise_residual(s, pot) < 1e-4
    assert hj_integral_identity(s, pot) < 1e-5
    assert abs(functional_J(s.psi, pot, s.E)) < 1e-4


def test_oscillator_ground_energy(oscillator_state):
    pot, s = oscillator_state
    assert s.E == pytest.approx(0.5, rel=5e-3)
    assert hj_integral_identity(s, pot) < 1e-4


def test_energy_log_is_monotone_and_norm_kept(box_state, oscillator_state):
    for pot, s in (box_state, oscillator_state):
        assert np.all(np.diff(s.log) <= 0)
        assert norm2(s.psi) == pytest.approx(1.0, abs=1e-10)


def test_variational_bound(box_state, oscillator_state):
    for pot, s in (box_state, oscillator_state):
        assert s.E >= discrete_ground_energy(pot, s.psi.grid) - 1e-10


def test_stationarity_consistent_with_residual(box_state):
    pot, s = box_state
    assert abs(functional_J(s.psi, pot, s.E)) <= 10 * max(tise_residual(s, pot), 1e-12)


def test_restart_from_ground_state_is_fixed_point(box_state):
    pot, s = box_state
    again = minimize(pot, s.psi)
    assert again.iterations <= 2
    assert again.E == pytest.approx(s.E, abs=1e-12)


def test_exact_discrete_eigenvector_has_tiny_residual():
    pot = Potential.box()
    g = pot.grid(1 / 128)
    n = g.counts[0] - 2
    j = np.arange(1, n + 1)
    v = np.zeros(g.shape)
    v[1:-1] = np.sin(np.pi * j / (n + 1))
    psi = ScalarField(g, v / np.sqrt(norm2(ScalarField(g, v))))
    H, mask = hamiltonian(pot, g)
    x = psi.values[mask]
    E = float(x @ (H @ x) / (x @ x))
    assert tise_residual(VariationalState(psi, E), pot) < 1e-10


def test_random_state_fails_audits():
    pot = Potential.box()
    g = pot.grid(1 / 128)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.shape)
    v[0] = v[-1] = 0
    psi = ScalarField(g, v / np.sqrt(norm2(ScalarField(g, v))))
    s = VariationalState(psi, 10.0)
    assert tise_residual(s, pot) > 1.0
    assert hj_integral_identity(s, pot) > 1.0


def test_iteration_cap_carries_best_state():
    pot = Potential.box()
    g = pot.grid(1 / 128)
    with pytest.raises(MinimizationError) as err:
        minimize(pot, sine_guess(g), metric="l2", max_iter=5)
    best = err.value.best
    assert best.iterations == 5 and np.isfinite(best.E)
    assert best.E < best.log[0]


def test_zero_start_rejected():
    pot = Potential.box()
    with pytest.raises(ValueError):
        minimize(pot, ScalarField(pot.grid(1 / 64), 0.0))


def test_two_dimensional_box():
    pot = Potential.box((0.0, 0.0), (1.0, 1.0))
    s = minimize(pot, sine_guess(pot.grid(1 / 48)))
    assert s.E == pytest.approx(PI2, rel=5e-3)


def test_sampled_potential_matches_analytic():
    pot = Potential.harmonic(half_width=6.0)
    g = pot.grid(1 / 16)
    sampled = Potential.sampled(ScalarField(g, pot.sample(g)))
    a = minimize(pot, sine_guess(g))
    b = minimize(sampled, sine_guess(g))
    assert a.E == pytest.approx(b.E, abs=1e-12)


@settings(max_examples=10)
@given(st.floats(0.5, 3.0), st.floats(0.5, 2.0))
def test_rayleigh_quotient_above_discrete_ground(omega, mass):
    pot = Potential.harmonic(omega=omega, half_width=6.0, m=mass)
    g = pot.grid(1 / 8)
    s = minimize(pot, sine_guess(g), tol=1e-7)
    assert s.E >= discrete_ground_energy(pot, g) - 1e-10
    assert s.E == pytest.approx(0.5 * omega, rel=2e-2)
