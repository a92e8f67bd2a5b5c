import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opticqm.chladni_modes import (CLUSTER_C, EigenSolveError, MembraneProblem, assemble,
                                   bessel_zero, detect_multiplicity, edge_interpolation_error,
                                   eigensolve, nodal_set, nodal_stats, separable_align,
                                   separable_reference, solve_modes, superpose)
from opticqm.grid import PERIODIC, Grid, ScalarField

PI2 = np.pi**2
GOLDEN = (1 + np.sqrt(5)) / 2


@pytest.fixture(scope="module")
def square64():
    op = assemble(MembraneProblem("square", "dirichlet", 1 / 64))
    return op, solve_modes(op, 6)


# -------------------------------------------------------------- assembly

def test_interval_ground_eigenvalue():
    op = assemble(MembraneProblem("interval", "dirichlet", 1 / 64))
    lam = solve_modes(op, 1)[0].eigenvalue
    assert lam == pytest.approx(PI2, rel=1e-3)


@pytest.mark.parametrize("domain,bc", [("square", "dirichlet"), ("square", "neumann"),
                                       ("rectangle", "dirichlet"), ("disk", "dirichlet"),
                                       ("disk", "neumann"), ("annulus", "dirichlet"),
                                       ("torus", "periodic")])
def test_operator_is_exactly_symmetric(domain, bc):
    op = assemble(MembraneProblem(domain, bc, 1 / 40, a=1.0, b=1.25, R=1.0, r=0.4))
    assert abs(op.K - op.K.T).max() == 0.0
    assert np.all(op.M > 0)


@pytest.mark.parametrize("domain", ["square", "rectangle", "disk"])
def test_neumann_annihilates_constants(domain):
    op = assemble(MembraneProblem(domain, "neumann", 1 / 40, b=1.5))
    assert np.abs(op.K @ np.ones(op.n)).max() < 1e-9


def test_too_coarse_domain_rejected():
    with pytest.raises(ValueError, match="too coarse"):
        assemble(MembraneProblem("square", "dirichlet", 1 / 16))


def test_problem_validation():
    with pytest.raises(ValueError):
        MembraneProblem("dodecahedron")
    with pytest.raises(ValueError):
        MembraneProblem("annulus", r=2.0, R=1.0)
    with pytest.raises(ValueError):
        MembraneProblem("square", h=-1.0)


# ------------------------------------------------------------ spectrum

def test_square_low_spectrum(square64):
    _, modes = square64
    lam = [m.eigenvalue for m in modes[:4]]
    assert np.allclose(lam, np.array([2, 5, 5, 8]) * PI2, rtol=5e-3)
    assert [m.cluster_id for m in modes[:4]] == [0, 1, 1, 2]
    assert [m.multiplicity for m in modes[:4]] == [1, 2, 2, 1]


def test_modes_are_ascending_normalised_and_resolved(square64):
    op, modes = square64
    lam = np.array([m.eigenvalue for m in modes])
    assert np.all(np.diff(lam) >= 0)
    for m in modes:
        v = op.from_field(m.w)
        assert np.sum(op.M * v * v) == pytest.approx(1.0, abs=1e-10)
        assert m.residual / m.eigenvalue < 1e-6


def test_distinct_clusters_are_orthogonal(square64):
    op, modes = square64
    V = np.stack([op.from_field(m.w) for m in modes], axis=1)
    G = V.T @ (op.M[:, None] * V)
    for i, mi in enumerate(modes):
        for j, mj in enumerate(modes):
            if i != j:
                assert abs(G[i, j]) < 1e-8


def test_disk_ground_eigenvalue():
    op = assemble(MembraneProblem("disk", "dirichlet", 1 / 64))
    lam = solve_modes(op, 1)[0].eigenvalue
    assert lam == pytest.approx(bessel_zero(0, 1) ** 2, rel=1.5e-2)


def test_bessel_zeros():
    assert bessel_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-12)
    assert bessel_zero(1, 1) == pytest.approx(3.831705970207512, abs=1e-12)


def test_neumann_square_null_mode():
    op = assemble(MembraneProblem("square", "neumann", 1 / 40))
    m = solve_modes(op, 2)
    assert m[0].eigenvalue == 0.0
    v = op.from_field(m[0].w)
    assert np.ptp(v) < 1e-8
    assert m[1].eigenvalue == pytest.approx(PI2, rel=5e-3)


def test_torus_spectrum():
    op = assemble(MembraneProblem("torus", "periodic", 1 / 40))
    lam = [m.eigenvalue for m in solve_modes(op, 5)]
    assert lam[0] == 0.0
    assert np.allclose(lam[1:], 4 * PI2, rtol=5e-3)
    assert len(set(detect_multiplicity(lam, 1 / 40)[1:])) == 1


def test_sparse_path_matches_dense():
    op = assemble(MembraneProblem("square", "dirichlet", 1 / 40))
    dense, Xd = eigensolve(op.K, op.M, 4)
    sparse, Xs = eigensolve(op.K, op.M, 4, dense_limit=0)
    assert np.allclose(dense, sparse, rtol=1e-10)


def test_eigensolver_cap_reports_residual():
    op = assemble(MembraneProblem("square", "dirichlet", 1 / 40))
    with pytest.raises(EigenSolveError) as err:
        eigensolve(op.K, op.M, 4, dense_limit=0, max_iter=1, tol=1e-300)
    assert err.value.residual is not None and err.value.residual > 0


# ---------------------------------------------------------- clustering

def test_golden_rectangle_has_only_singletons():
    op = assemble(MembraneProblem("rectangle", "dirichlet", 1 / 64, a=1.0, b=GOLDEN))
    modes = solve_modes(op, 8)
    assert all(m.multiplicity == 1 for m in modes)


def test_identical_eigenvalues_form_one_cluster():
    assert list(detect_multiplicity([3.0] * 5, 0.01)) == [0] * 5


def test_cluster_constant_covers_square_split():
    # relative split of the (1,2)/(2,1) pair at h = 1/64 stays below C h^2
    op = assemble(MembraneProblem("square", "dirichlet", 1 / 64))
    lam = solve_modes(op, 3)
    split = abs(lam[2].eigenvalue - lam[1].eigenvalue) / lam[2].eigenvalue
    assert split < CLUSTER_C / 64**2


@given(st.lists(st.floats(1.0, 100.0), min_size=1, max_size=12), st.floats(1e-3, 0.1))
def test_cluster_ids_are_monotone_and_contiguous(vals, h):
    ids = detect_multiplicity(sorted(vals), h)
    assert ids[0] == 0
    assert np.all(np.diff(ids) >= 0) and np.all(np.diff(ids) <= 1)


# -------------------------------------------------------- superposition

def test_superpose_validation(square64):
    _, modes = square64
    with pytest.raises(ValueError):
        superpose(modes[1:3], [0, 0])
    with pytest.raises(ValueError):
        superpose(modes[0:2], [1, 1])
    w = superpose(modes[1:3], [1, 0])
    assert np.allclose(w.values, modes[1].w.values, atol=1e-12)


@settings(max_examples=15)
@given(st.floats(0, 2 * np.pi))
def test_degenerate_combinations_keep_residual(square64, angle):
    op, modes = square64
    w = superpose(modes[1:3], [np.cos(angle), np.sin(angle)], op)
    v = op.from_field(w)
    lam = modes[1].eigenvalue
    assert np.sum(op.M * v * v) == pytest.approx(1.0, abs=1e-10)
    assert np.abs(op.apply_laplacian(v) + lam * v).max() / lam < 1e-6


def test_aligned_modes_match_separable_sines(square64):
    op, modes = square64
    aligned = separable_align(modes[:4], op)
    for md, (m, n) in zip(aligned, [(1, 1), (1, 2), (2, 1), (2, 2)]):
        ref = separable_reference(op, m, n).values
        ref = ref / np.sqrt(np.sum(op.M * op.from_field(ScalarField(op.grid, ref)) ** 2))
        assert np.abs(md.w.values - ref).max() < 5e-3


# ---------------------------------------------------------- nodal sets

def _anti_diagonal_field(n=65):
    g = Grid.box([0, 0], [1, 1], [n, n])
    x, y = g.mesh()
    s = np.sin
    return ScalarField(g, s(2 * np.pi * x) * s(np.pi * y) + s(np.pi * x) * s(2 * np.pi * y))


def test_superposition_nodal_line_is_anti_diagonal():
    w = _anti_diagonal_field()
    ns = nodal_set(w, w.grid.interior_mask())
    assert len(ns) == 1 and ns.closed == [False]
    pts = ns.polylines[0]
    assert np.abs(pts[:, 0] + pts[:, 1] - 1).max() < 1e-3
    assert edge_interpolation_error(w, ns) < 1e-12


def test_mode_21_nodal_line_is_vertical(square64):
    op, modes = square64
    mode21 = separable_align(modes[:4], op)[2]
    ns = nodal_set(mode21.w, op.mask)
    count, closed, length = nodal_stats(ns)
    assert (count, closed) == (1, 0)
    assert np.abs(ns.polylines[0][:, 0] - 0.5).max() < 1e-9
    # the line stops on the last interior cell edge, one h from each wall
    assert length == pytest.approx(1.0 - 2 / 64, abs=1e-9)


def test_ground_state_has_empty_nodal_set(square64):
    op, modes = square64
    ns = nodal_set(modes[0].w, op.mask)
    assert nodal_stats(ns) == (0, 0, 0.0)
    v = op.from_field(modes[0].w)
    assert v.min() > 0


def test_disk_m1_mode_has_nodal_diameter():
    op = assemble(MembraneProblem("disk", "dirichlet", 1 / 32))
    modes = solve_modes(op, 3)
    assert modes[1].multiplicity == 2
    ns = nodal_set(modes[1].w, op.mask)
    assert len(ns) == 1 and not ns.closed[0]
    pts = ns.polylines[0]
    # a straight line through the centre: every vertex is collinear with the ends
    d = pts[-1] - pts[0]
    d = d / np.linalg.norm(d)
    def dist(p):
        return np.abs(p[..., 0] * d[1] - p[..., 1] * d[0])

    assert dist(pts - pts[0]).max() < 2 / 32
    assert dist(-pts[0]) < 2 / 32


def test_torus_nodal_lines_are_closed():
    g = Grid.box([0, 0], [1, 1], [64, 64], PERIODIC)
    x, _ = g.mesh()
    ns = nodal_set(ScalarField(g, np.sin(2 * np.pi * x + 0.1)))
    count, closed, length = nodal_stats(ns)
    assert (count, closed) == (2, 2)
    assert length == pytest.approx(2.0, abs=1e-9)


def test_zero_field_is_degenerate():
    g = Grid.box([0, 0], [1, 1], [8, 8])
    with pytest.raises(ValueError, match="degenerate field"):
        nodal_set(ScalarField(g, 0.0))


@settings(max_examples=20)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(0.1, 3.0), st.floats(0, 1))
def test_nodal_vertices_lie_on_sign_change_edges(m, n, amp, shift):
    g = Grid.box([0, 0], [1, 1], [41, 41])
    x, y = g.mesh()
    v = amp * np.sin(m * np.pi * x + shift) * np.cos(n * np.pi * y) + 0.1 * x
    w = ScalarField(g, v)
    ns = nodal_set(w)
    assert edge_interpolation_error(w, ns) < 1e-12 * amp
    h = g.h
    for pts, c in zip(ns.polylines, ns.closed):
        seq = np.vstack([pts, pts[:1]]) if c else pts
        assert np.all(np.linalg.norm(np.diff(seq, axis=0), axis=1) <= np.sqrt(2) * h + 1e-12)
