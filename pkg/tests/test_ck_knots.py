from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv
from scipy.spatial.transform import Rotation

from opticqm.ck_knots import (CKField, Curve3D, RadialScalarPair, StagnationError,
                              ck_build_cylinder, circle, divergence_residual, force_free_residual,
                              hopf_pair, linking_number, nodal_intersection, null_check,
                              parse_rational, radial_helmholtz_residual, radial_scalar,
                              rational_slope, resample, torus_field, torus_winding,
                              trace_field_line, vector_helmholtz_residual)
from opticqm.grid import PERIODIC, Grid, ScalarField, VectorField3

K = 2.0


def cube(n):
    return Grid.box([-1, -1, -1], [1, 1, 1], [n] * 3)


@pytest.fixture(scope="module")
def ck33():
    return ck_build_cylinder(cube(33), K, 1, 0.0)


@pytest.fixture(scope="module")
def torus_grid():
    return Grid.box([-1.6, -1.6, -0.8], [1.6, 1.6, 0.8], [65, 65, 33])


# ------------------------------------------------------------ CK field

def test_force_free_and_divergence_converge():
    fields = [ck_build_cylinder(cube(n), K, 1, 0.0) for n in (17, 33, 65)]
    ff = [force_free_residual(f) for f in fields]
    dv = [divergence_residual(f) for f in fields]
    assert ff[1] / ff[2] == pytest.approx(4.0, rel=0.2)
    assert ff[0] / ff[1] == pytest.approx(4.0, rel=0.2)
    assert dv[1] / dv[2] == pytest.approx(4.0, rel=0.2)
    vh = [vector_helmholtz_residual(f) for f in fields[1:]]
    assert vh[0] / vh[1] == pytest.approx(4.0, rel=0.2)


def test_axial_mode_is_force_free():
    f = ck_build_cylinder(cube(33), 3.0, 2, 1.5)
    assert force_free_residual(f) < 0.05
    assert divergence_residual(f) < 0.05


def test_evanescent_profile_rejected():
    with pytest.raises(ValueError, match="evanescent"):
        ck_build_cylinder(cube(9), 1.0, 1, 1.0)


def test_gradient_field_is_not_force_free():
    g = cube(17)
    x, y, z = g.mesh()
    F = VectorField3(g, [np.cos(x), 0 * x, 0 * x])  # grad sin(x)
    r = force_free_residual(CKField(F, 1.5))
    assert r == pytest.approx(1.5, rel=0.05)
    zero = CKField(VectorField3(g, np.zeros((3,) + g.shape)), 1.5)
    assert force_free_residual(zero) == 0.0


def test_radial_scalar_reproduces_bessel_pair(ck33):
    g = ck33.grid
    p = radial_scalar(ck33)
    x, y, z = g.mesh()
    rho, phi = np.hypot(x, y), np.arctan2(y, x)
    plane = np.isclose(z, 0.0)
    scale = np.abs(jv(1, K * rho)).max()
    assert np.abs(p.u1.values - jv(1, K * rho) * np.cos(phi))[plane].max() < 1e-12 * scale
    assert np.abs(p.u2.values - jv(1, K * rho) * np.sin(phi))[plane].max() < 1e-12 * scale
    assert p.k2 == K * K


def test_small_rho_linear_behaviour():
    g = Grid.box([-0.04, -0.04, -0.04], [0.04, 0.04, 0.04], [9, 9, 9])
    p = radial_scalar(ck_build_cylinder(g, K, 1, 0.0))
    x, y, z = g.mesh()
    rho, phi = np.hypot(x, y), np.arctan2(y, x)
    plane = np.isclose(z, 0.0) & (rho > 0) & (K * rho < 0.1)
    approx = K / 2 * rho * np.cos(phi)
    big = plane & (np.abs(np.cos(phi)) > 0.5)
    rel = np.abs(p.u1.values - approx)[big] / np.abs(approx)[big]
    assert rel.max() < 0.01


def test_radial_helmholtz_converges():
    r = [radial_helmholtz_residual(radial_scalar(ck_build_cylinder(cube(n), K, 1, 0.0)))
         for n in (33, 65)]
    assert r[0][0] / r[1][0] == pytest.approx(4.0, rel=0.2)
    assert r[0][1] / r[1][1] == pytest.approx(4.0, rel=0.2)


def test_azimuthal_field_has_degenerate_radial_scalar():
    g = cube(9)
    x, y, z = g.mesh()
    F = VectorField3(g, [-y, x, 0 * x])
    with pytest.raises(ValueError, match="degenerate"):
        radial_scalar(CKField(F, 1.0))


def test_null_check_examples():
    g = Grid.box([0, 0, 0], [1, 1, 1], [8, 8, 8], PERIODIC)
    x, y, z = g.mesh()
    wave = np.exp(2j * np.pi * z)
    F = VectorField3(g, [wave, 1j * wave, 0 * wave])
    d1, d2 = null_check(CKField(F, 2 * np.pi))
    assert np.abs(d1.values).max() < 1e-14 and np.abs(d2.values).max() < 1e-14
    E = np.stack([np.cos(x), np.sin(y), 0 * z])
    d1, d2 = null_check(CKField(VectorField3(g, E / np.sqrt(2)), 1.0))
    assert np.all(d2.values == 0)
    assert np.allclose(d1.values, np.sum(E**2, axis=0))
    standing = np.stack([np.cos(2 * np.pi * z), 0 * z, 0 * z])
    Hs = np.stack([0 * z, np.sin(2 * np.pi * z), 0 * z])
    d1, _ = null_check(CKField(VectorField3(g, (standing + 1j * Hs) / np.sqrt(2)), 2 * np.pi))
    assert np.abs(d1.values).max() > 0.5


# --------------------------------------------------- nodal intersection

def test_cylinder_centerline(ck33):
    rep = nodal_intersection(radial_scalar(ck33))
    assert len(rep.curves) == 1
    pts = rep.curves[0].points
    h = ck33.grid.h
    assert np.hypot(pts[:, 0], pts[:, 1]).max() < 2 * h
    assert np.ptp(pts[:, 2]) > 2 - 4 * h


def test_linear_fields_give_straight_axis():
    g = Grid.box([-1, -1, -1], [1, 1, 1], [9, 9, 9])
    x, y, z = g.mesh()
    p = RadialScalarPair(ScalarField(g, x), ScalarField(g, y), 0.0)
    rep = nodal_intersection(p)
    assert len(rep.curves) == 1
    pts = rep.curves[0].points
    assert np.abs(pts[:, :2]).max() < 1e-10


def test_no_common_zero_gives_empty_set():
    g = cube(9)
    x, y, z = g.mesh()
    p = RadialScalarPair(ScalarField(g, x**2 + y**2 - 1), ScalarField(g, 1.0 + 0 * x), 0.0)
    assert nodal_intersection(p).curves == []


def test_tangent_zero_sets_are_skipped():
    g = cube(9)
    x, y, z = g.mesh()
    # both zero sets are the plane x = 0.1 (non-transversal)
    p = RadialScalarPair(ScalarField(g, x - 0.1), ScalarField(g, 2 * (x - 0.1)), 0.0)
    rep = nodal_intersection(p)
    assert rep.curves == [] and len(rep.skipped) > 0


# ------------------------------------------------------- field lines

@pytest.mark.parametrize("slope,pq", [(Fraction(3, 2), (2, 3)), (Fraction(1), (1, 1))])
def test_rational_slope_field_lines_close(torus_grid, slope, pq):
    v = torus_field(torus_grid, float(slope))
    c = trace_field_line(v, [1.4, 0, 0], 40.0)
    assert c.closed
    assert torus_winding(c) == pq
    assert rational_slope(c) == slope
    assert np.gcd(*pq) == 1
    assert c.max_segment() < 2 * torus_grid.h / 4 + 1e-12


def test_repeated_curve_doubles_winding(torus_grid):
    c = trace_field_line(torus_field(torus_grid, 1.5), [1.4, 0, 0], 40.0)
    assert torus_winding(c.repeated(2)) == (4, 6)


def test_irrational_slope_stays_open(torus_grid):
    v = torus_field(torus_grid, 1 / np.sqrt(2))
    c = trace_field_line(v, [1.4, 0, 0], 40.0)
    assert not c.closed
    d = np.linalg.norm(c.points[40:] - c.points[0], axis=1)
    assert d.min() > 2 * torus_grid.h
    with pytest.raises(ValueError):
        torus_winding(c)


def test_planar_circle_winds_once_toroidally():
    c = circle((0, 0, 0), (0, 0, 1), 1.3, 200)
    assert torus_winding(c) == (1, 0)


def test_stagnation_raises(torus_grid):
    v = VectorField3(torus_grid, np.zeros((3,) + torus_grid.shape))
    with pytest.raises(StagnationError):
        trace_field_line(v, [1.0, 0, 0], 1.0)


def test_parse_rational():
    assert parse_rational("3/2") == Fraction(3, 2)
    assert parse_rational(" 0.5 ") == Fraction(1, 2)
    with pytest.raises(ValueError):
        parse_rational("abc")


# ------------------------------------------------------------- links

def test_hopf_pair_links_once():
    c1, c2 = hopf_pair(512)
    rep = linking_number(c1, c2)
    assert rep.linking_number == 1 and rep.reliable
    assert abs(rep.raw - 1) < 1e-3
    assert linking_number(c1, c2.reversed()).raw == pytest.approx(-1, abs=1e-3)


def test_disjoint_coplanar_circles_do_not_link():
    a = circle((0, 0, 0), (0, 0, 1), 1.0, 256)
    b = circle((3, 0, 0), (0, 0, 1), 1.0, 256)
    assert abs(linking_number(a, b).raw) < 1e-3


def test_resampling_invariance():
    c1, c2 = hopf_pair(256)
    r256 = linking_number(c1, c2).raw
    r1024 = linking_number(resample(c1, 1024), resample(c2, 1024)).raw
    assert abs(r256 - r1024) < 1e-3


def test_too_close_or_open_curves_rejected():
    a = circle((0, 0, 0), (0, 0, 1), 1.0, 64)
    b = circle((0, 0, 0.01), (0, 0, 1), 1.0, 64)
    with pytest.raises(ValueError, match="too close"):
        linking_number(a, b)
    with pytest.raises(ValueError):
        linking_number(Curve3D(a.points, False), b)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_linking_is_rigid_motion_invariant(seed, sx, sy, sz):
    c1, c2 = hopf_pair(128)
    R = Rotation.random(random_state=seed).as_matrix()
    shift = np.array([sx, sy, sz])
    rep = linking_number(c1.transformed(R, shift), c2.transformed(R, shift))
    assert rep.raw == pytest.approx(1.0, abs=1e-3)
