import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from opticqm.grid import PERIODIC, Grid, VectorField3, divergence, integrate
from opticqm.maxwell_rs import (RSField, circular_plane_wave, continuity_residual,
                                energy_density, evolve, evolve_series, photon_normalize,
                                probability_current, rs_build, total_energy)


def cube(n=4, boundary=PERIODIC):
    return Grid.box([0, 0, 0], [1, 1, 1], [n] * 3, boundary)


def const(g, v):
    return VectorField3(g, [np.full(g.shape, float(c)) for c in v])


def test_rs_build_direct_formula():
    g = cube()
    f = rs_build(const(g, (1, 0, 0)), const(g, (0, 1, 0)), 1)
    want = (np.array([1, 0, 0]) + 1j * np.array([0, 1, 0])) / np.sqrt(2)
    assert np.allclose(f.F.values[:, 0, 0, 0], want)


def test_rs_build_zero_and_helicity_flip():
    g = cube()
    assert np.all(rs_build(const(g, (0, 0, 0)), const(g, (0, 0, 0))).F.values == 0)
    E, H = const(g, (1, 2, 3)), const(g, (-1, 0.5, 2))
    p, m = rs_build(E, H, 1), rs_build(E, H, -1)
    assert np.array_equal(p.F.values.real, m.F.values.real)
    assert np.array_equal(p.F.values.imag, -m.F.values.imag)
    assert np.allclose(m.E.values, E.values) and np.allclose(m.H.values, H.values)


def test_rs_build_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        rs_build(const(cube(4), (1, 0, 0)), const(cube(5), (0, 1, 0)))


def test_rs_field_rejects_bad_helicity():
    with pytest.raises(ValueError):
        RSField(const(cube(), (1, 0, 0)), helicity=0)


def test_energy_density_examples():
    g = cube()
    assert np.allclose(energy_density(rs_build(const(g, (1, 0, 0)), const(g, (0, 1, 0)))).values, 1.0)
    assert np.all(energy_density(rs_build(const(g, (0, 0, 0)), const(g, (0, 0, 0)))).values == 0)


vec = arrays(np.float64, (3, 3, 3, 3), elements=st.floats(-1e3, 1e3))


@given(vec, vec, st.sampled_from([1, -1]))
def test_energy_density_identity(E, H, lam):
    g = cube(3)
    f = rs_build(VectorField3(g, E), VectorField3(g, H), lam)
    eps = energy_density(f).values
    want = 0.5 * (np.sum(E**2, axis=0) + np.sum(H**2, axis=0))
    assert np.all(eps >= 0)
    assert np.allclose(eps, want, rtol=1e-12, atol=1e-12 * (1 + want.max()))


def test_photon_normalize_hand_quadrature():
    g = Grid.box([0, 0, 0], [1, 1, 1], [5, 5, 5])
    f = rs_build(const(g, (2, 0, 0)), const(g, (0, 0, 0)))
    s = photon_normalize(f)
    assert s.energy == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(s.psi.values, f.F.values / np.sqrt(2))
    assert s.norm() == pytest.approx(1.0, abs=1e-10)


def test_photon_normalize_idempotent_and_zero_error():
    g = cube(6)
    f = circular_plane_wave(g, 1, amplitude=3.0)
    s = photon_normalize(f)
    again = photon_normalize(RSField(s.psi, f.helicity))
    assert again.energy == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(again.psi.values, s.psi.values, atol=1e-15)
    with pytest.raises(ValueError, match="null total energy"):
        photon_normalize(rs_build(const(g, (0, 0, 0)), const(g, (0, 0, 0))))


def test_constant_field_is_stationary():
    g = cube(8)
    f = rs_build(const(g, (1, -2, 0.5)), const(g, (0.3, 0, 1)))
    out = evolve(f, 0.05, 20)
    assert np.array_equal(out.F.values, f.F.values)


def test_cfl_violation_raises():
    g = cube(8)
    with pytest.raises(ValueError, match="CFL"):
        evolve(circular_plane_wave(g), 0.51 * g.h, 1)


def test_evolution_needs_periodic_grid():
    g = cube(8, "clamped")
    with pytest.raises(ValueError):
        evolve(rs_build(const(g, (1, 0, 0)), const(g, (0, 1, 0))), 0.01, 1)


def _phase_error(n, order=2):
    g = Grid.box([0, 0, 0], [1, 1, 1], [4, 4, n], PERIODIC)
    dt = g.h / 4
    steps = n // 2
    f = circular_plane_wave(g, 1)
    out = evolve(f, dt, steps, order)
    exact = circular_plane_wave(g, 1, t=steps * dt)
    return np.max(np.abs(out.F.values - exact.F.values))


def test_plane_wave_phase_converges():
    e1, e2 = _phase_error(32), _phase_error(64)
    assert e1 / e2 == pytest.approx(4.0, rel=0.15)


def test_plane_wave_conserves_energy_and_divergence():
    # RK4 damps each step by about (w dt)^6/144; kh = 2pi/64 keeps that far below 1e-8
    g = Grid.box([0, 0, 0], [1, 1, 1], [4, 4, 64], PERIODIC)
    f = circular_plane_wave(g, 1)
    out = evolve(f, g.h / 4, 100)
    assert abs(total_energy(out) / total_energy(f) - 1) < 1e-8
    assert np.max(np.abs(divergence(out.F).values)) < 1e-8


def test_random_divergence_free_field_stays_divergence_free():
    g = Grid.box([0, 0, 0], [1, 1, 1], [12, 12, 12], PERIODIC)
    rng = np.random.default_rng(5)
    from opticqm.grid import curl
    A = VectorField3(g, rng.standard_normal((3,) + g.shape) + 1j * rng.standard_normal((3,) + g.shape))
    F = curl(A)
    f = RSField(F, 1)
    d0 = np.max(np.abs(divergence(F).values))
    out = evolve(f, g.h / 2, 100)
    assert np.max(np.abs(divergence(out.F).values)) - d0 < 1e-8


def test_probability_current_examples():
    g = cube()
    f = rs_build(const(g, (1, 0, 0)), const(g, (0, 1, 0)))
    j = probability_current(f, 1.0).values
    assert np.allclose(j[:, 0, 0, 0], [0, 0, 1])
    f0 = rs_build(const(g, (1, 2, 3)), const(g, (0, 0, 0)))
    assert np.all(probability_current(f0, 1.0).values == 0)


@given(vec, vec, st.sampled_from([1, -1]), st.floats(0.1, 10))
def test_probability_current_two_paths_agree(E, H, lam, energy):
    g = cube(3)
    f = rs_build(VectorField3(g, E), VectorField3(g, H), lam)
    a = probability_current(f, energy, "EH").values
    b = probability_current(f, energy, "rs").values
    scale = 1 + np.max(np.abs(E)) * np.max(np.abs(H)) / energy
    assert np.max(np.abs(a - b)) <= 1e-12 * scale


def test_continuity_residual_stationary_and_contract():
    g = cube(6)
    f = rs_build(const(g, (1, 0, 0)), const(g, (0, 1, 0)))
    assert continuity_residual([f, f, f], 0.1) == 0.0
    with pytest.raises(ValueError):
        continuity_residual([f, f], 0.1)


def _two_wave_series(n):
    g = Grid.box([0, 0, 0], [1, 1, 1], [n, 4, n], PERIODIC)
    x, y, z = g.mesh()
    a = circular_plane_wave(g, 1).F.values
    # second wave travelling along x
    kx = 2 * np.pi
    b = np.array([0 * x, 1j + 0 * x, 1 + 0 * x]) / np.sqrt(2) * np.exp(1j * kx * x) * 0.7
    f = RSField(VectorField3(g, a + b), 1)
    dt = g.h / 4
    return continuity_residual(evolve_series(f, dt, n // 4), dt)


def test_continuity_residual_converges_at_second_order():
    r1, r2 = _two_wave_series(16), _two_wave_series(32)
    assert r1 / r2 == pytest.approx(4.0, rel=0.2)


def test_helicity_time_reversal():
    g = Grid.box([0, 0, 0], [1, 1, 1], [8, 8, 8], PERIODIC)
    rng = np.random.default_rng(11)
    F = rng.standard_normal((3,) + g.shape) + 1j * rng.standard_normal((3,) + g.shape)
    minus = evolve(RSField(VectorField3(g, F), -1), g.h / 4, 10)
    plus = evolve(RSField(VectorField3(g, np.conj(F)), 1), g.h / 4, 10)
    assert np.max(np.abs(plus.F.values - np.conj(minus.F.values))) < 1e-13


def test_energy_integral_matches_quadrature():
    g = cube(8)
    f = circular_plane_wave(g, 1, amplitude=2.0)
    assert total_energy(f) == pytest.approx(integrate(energy_density(f)))
    assert total_energy(f) == pytest.approx(4.0)
