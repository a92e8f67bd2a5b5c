"""Membrane eigenmodes, multiplicity clusters and Chladni nodal sets.

Sign convention: ``lap w = -lam w`` with ``lam >= 0``.  The discrete
problem is the symmetric pencil ``K w = lam M w``; ``M`` holds the
quadrature weights, so ``w^T M w`` is the L2 norm of the mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .grid import CLAMPED, PERIODIC, Grid, ScalarField

DOMAINS = ("interval", "square", "rectangle", "disk", "annulus", "torus")
BCS = ("dirichlet", "neumann", "periodic")
MIN_INTERIOR = 32
DENSE_LIMIT = 4096
# Relative split of the (1,2)/(2,1) square pair under the 5-point stencil is
# (pi^2/4) |hx^2 - hy^2| to leading order; C doubles the worst case hy -> 0.
CLUSTER_C = 2.0 * np.pi**2 / 4.0


class EigenSolveError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class MembraneProblem:
    """``domain`` with its size parameters, boundary condition and spacing ``h``.

    ``rectangle`` uses ``a, b``; ``disk`` uses ``R``; ``annulus`` uses
    ``r, R``; ``interval`` uses ``a``; ``torus`` is a periodic ``a x b``
    rectangle (a closed surface).
    """

    domain: str = "square"
    bc: str = "dirichlet"
    h: float = 1.0 / 64
    a: float = 1.0
    b: float = 1.0
    R: float = 1.0
    r: float = 0.5

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}; choose from {DOMAINS}")
        if self.bc not in BCS:
            raise ValueError(f"unknown boundary condition {self.bc!r}; choose from {BCS}")
        if (self.domain == "torus") != (self.bc == "periodic"):
            raise ValueError("the torus domain goes with bc='periodic' and only with it")
        if not (self.h > 0 and self.a > 0 and self.b > 0 and self.R > 0 and self.r > 0):
            raise ValueError("sizes and spacing must be positive")
        if self.domain == "annulus" and not self.r < self.R:
            raise ValueError("annulus needs r < R")


@dataclass
class DiscreteOperator:
    problem: MembraneProblem
    grid: Grid
    mask: np.ndarray          # nodes that carry unknowns
    K: sps.csr_matrix         # symmetric, positive semi-definite
    M: np.ndarray             # diagonal of the mass matrix

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def to_field(self, vec) -> ScalarField:
        full = np.zeros(self.grid.shape, dtype=np.result_type(vec, float))
        full[self.mask] = vec
        return ScalarField(self.grid, full)

    def from_field(self, f: ScalarField) -> np.ndarray:
        return np.asarray(f.values)[self.mask]

    def apply_laplacian(self, vec) -> np.ndarray:
        """Discrete ``lap w`` on the unknowns (``-M^-1 K w``)."""
        return -(self.K @ vec) / self.M


@dataclass
class EigenMode:
    eigenvalue: float
    w: ScalarField
    mask: np.ndarray
    cluster_id: int = 0
    multiplicity: int = 1
    residual: float = field(default=np.nan)


# ------------------------------------------------------------- assembly

def _second_diff_1d(n, h, kind):
    """1-D second difference: Dirichlet (unknowns only), Neumann (mirror ghost) or periodic."""
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    D = sps.diags([off, main, off], [-1, 0, 1], format="lil")
    if kind == "neumann":
        D[0, 1] = 2.0
        D[n - 1, n - 2] = 2.0
    elif kind == "periodic":
        D[0, n - 1] = 1.0
        D[n - 1, 0] = 1.0
    return (D / (h * h)).tocsr()


def _weights_1d(n, h, kind):
    w = np.full(n, h)
    if kind == "neumann":
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


def _counts(length, h):
    """Cells along a side; the spacing is adjusted to ``length / n`` when ``h`` does not divide it."""
    return max(int(round(length / h)), 1)


def assemble(problem: MembraneProblem) -> DiscreteOperator:
    """Symmetric 5-point (3-point in 1-D) discretisation of ``-lap``."""
    p = problem
    h = p.h
    if p.domain in ("interval", "square", "rectangle", "torus"):
        if p.domain == "interval":
            sides = (p.a,)
        elif p.domain == "square":
            sides = (1.0, 1.0)
        else:
            sides = (p.a, p.b)
        cells = [_counts(L, h) for L in sides]
        hs = [L / n for L, n in zip(sides, cells)]
        kind = p.bc
        if kind == "periodic":
            counts = cells
            grid = Grid([0.0] * len(sides), hs, counts, PERIODIC)
            n_unk = counts
        else:
            counts = [c + 1 for c in cells]
            grid = Grid([0.0] * len(sides), hs, counts, CLAMPED)
            n_unk = [c - 1 for c in cells] if kind == "dirichlet" else counts
        if min(c - 1 for c in cells) < MIN_INTERIOR:
            raise ValueError(f"domain too coarse: need at least {MIN_INTERIOR} interior nodes per axis")
        Ds = [_second_diff_1d(n, hh, kind) for n, hh in zip(n_unk, hs)]
        Ws = [_weights_1d(n, hh, kind) for n, hh in zip(n_unk, hs)]
        if len(Ds) == 1:
            A, W = Ds[0], Ws[0]
        else:
            A = (sps.kron(Ds[0], sps.identity(n_unk[1])) + sps.kron(sps.identity(n_unk[0]), Ds[1]))
            W = np.multiply.outer(Ws[0], Ws[1]).ravel()
        # W A is exactly symmetric: the half weights cancel the mirrored factor 2
        K = (-sps.diags(W) @ A).tocsr()
        mask = np.zeros(grid.shape, dtype=bool)
        if kind == "dirichlet":
            mask[(slice(1, -1),) * grid.dim] = True
        else:
            mask[...] = True
        return DiscreteOperator(p, grid, mask, K, W)

    # embedded disk / annulus on a staircase mask
    R = p.R
    n_half = _counts(R, h)
    h = R / n_half
    if 2 * n_half - 1 < MIN_INTERIOR:
        raise ValueError(f"domain too coarse: need at least {MIN_INTERIOR} interior nodes per axis")
    count = 2 * n_half + 1
    grid = Grid([-R, -R], [h, h], [count, count], CLAMPED)
    x, y = grid.mesh()
    rr = np.hypot(x, y)
    tol = 1e-9 * h
    mask = rr < R - tol
    if p.domain == "annulus":
        mask &= rr > p.r + tol
    idx = -np.ones(grid.shape, dtype=int)
    idx[mask] = np.arange(mask.sum())
    n = int(mask.sum())
    rows, cols = [], []
    diag = np.full(n, 4.0) if p.bc == "dirichlet" else np.zeros(n)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        # the outer ring of the box is never inside, so roll does not wrap into the domain
        nb_in = np.roll(mask, (-di, -dj), (0, 1))
        nb_idx = np.roll(idx, (-di, -dj), (0, 1))
        both = mask & nb_in
        rows.append(idx[both])
        cols.append(nb_idx[both])
        if p.bc == "neumann":
            np.add.at(diag, idx[both], 1.0)
    r = np.concatenate(rows)
    adj = sps.coo_matrix((np.ones(r.size), (r, np.concatenate(cols))), shape=(n, n))
    # K = -h^2 lap_h with M = h^2 I; Neumann drops the links that leave the domain
    K = (sps.diags(diag) - adj).tocsr()
    return DiscreteOperator(p, grid, mask, K, np.full(n, h * h))


# ----------------------------------------------------------- eigensolver

def eigensolve(K, M, count: int, dense_limit: int = DENSE_LIMIT, tol: float = 1e-10,
               max_iter: int = 500, seed: int = 0):
    """``count`` smallest eigenpairs of ``K x = lam diag(M) x``.

    Dense symmetric solve up to ``dense_limit`` unknowns; above it, block
    shift-invert power iteration (subspace iteration with Rayleigh-Ritz
    deflation of the converged directions).  Eigenvectors are
    ``M``-orthonormal.  Returns ``(lam, X)``.
    """
    n = K.shape[0]
    M = np.asarray(M, dtype=float)
    if count < 1 or count > n:
        raise ValueError("count must be between 1 and the number of unknowns")
    if n <= dense_limit:
        Kd = K.toarray() if sps.issparse(K) else np.asarray(K)
        lam, X = sla.eigh(Kd, np.diag(M), subset_by_index=[0, count - 1])
        return lam, X

    Ms = sps.diags(M)
    scale = float(abs(K).sum(axis=1).max() / M.min())
    sigma = -1e-6 * scale
    lu = spla.splu((K - sigma * Ms).tocsc())
    p = count + max(4, count)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    res = None
    for it in range(max_iter):
        Y = lu.solve(M[:, None] * X)
        Ks = Y.T @ (K @ Y)
        Mm = Y.T @ (M[:, None] * Y)
        Ks = 0.5 * (Ks + Ks.T)
        Mm = 0.5 * (Mm + Mm.T)
        theta, C = sla.eigh(Ks, Mm)
        X = Y @ C
        lam = theta[:count]
        Xc = X[:, :count]
        R = K @ Xc - (M[:, None] * Xc) * lam[None, :]
        res = np.max(np.linalg.norm(R / M[:, None], axis=0)
                     / np.sqrt(np.sum(M[:, None] * Xc**2, axis=0))) / scale
        if res < tol:
            return lam, Xc
    raise EigenSolveError(f"eigensolver did not converge in {max_iter} iterations "
                          f"(relative residual {res:.3e})", res)


# ----------------------------------------------------------- clustering

def detect_multiplicity(eigenvalues, h: float, C: float = CLUSTER_C, floor: float = 1e-6):
    """Cluster ids for sorted eigenvalues; neighbours join when their relative gap
    is below ``max(floor, C h^2)``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return np.zeros(0, dtype=int)
    tol = max(floor, C * h * h)
    ids = np.zeros(lam.size, dtype=int)
    scale = max(np.abs(lam).max(), 1e-300)
    for i in range(1, lam.size):
        a, b = lam[i - 1], lam[i]
        ref = max(abs(a), abs(b))
        same = abs(b - a) <= tol * ref if ref > 1e-12 * scale else True
        ids[i] = ids[i - 1] if same else ids[i - 1] + 1
    return ids


def mode_residual(op: DiscreteOperator, w: ScalarField, lam: float) -> float:
    """Max-norm of ``lap_h w + lam w`` on the unknowns."""
    v = op.from_field(w)
    return float(np.abs(op.apply_laplacian(v) + lam * v).max())


def solve_modes(op: DiscreteOperator, count: int, **kwargs) -> list:
    """The ``count`` lowest modes, ascending, with cluster ids and multiplicities."""
    lam, X = eigensolve(op.K, op.M, count, **kwargs)
    lam = np.where(np.abs(lam) < 1e-12 * max(1.0, np.abs(lam).max()), 0.0, lam)
    ids = detect_multiplicity(lam, op.problem.h)
    modes = []
    for i in range(count):
        v = X[:, i]
        # deterministic sign: largest component positive
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        w = op.to_field(v)
        mult = int(np.sum(ids == ids[i]))
        modes.append(EigenMode(float(lam[i]), w, op.mask, int(ids[i]), mult,
                               mode_residual(op, w, lam[i])))
    return modes


def superpose(modes, coefficients, op: DiscreteOperator | None = None) -> ScalarField:
    """Normalised combination of modes from one cluster."""
    coefficients = np.asarray(coefficients, dtype=float)
    if len(modes) != len(coefficients):
        raise ValueError("one coefficient per mode")
    if not np.any(coefficients):
        raise ValueError("coefficients are all zero")
    if len({m.cluster_id for m in modes}) > 1:
        raise ValueError("modes must belong to one multiplicity cluster")
    w = sum(c * np.asarray(m.w.values) for c, m in zip(coefficients, modes))
    g = modes[0].w.grid
    if op is not None:
        norm = np.sqrt(np.sum(op.M * op.from_field(ScalarField(g, w)) ** 2))
    else:
        from .grid import integrate
        norm = np.sqrt(integrate(ScalarField(g, w**2)))
    return ScalarField(g, w / norm)


def align_cluster(modes, op: DiscreteOperator, references) -> list:
    """Rotate the modes of one cluster onto the orthonormal combination closest
    to ``references`` (fields or arrays, one per mode), by orthogonal Procrustes."""
    if len({m.cluster_id for m in modes}) > 1:
        raise ValueError("modes must belong to one multiplicity cluster")
    if len(references) != len(modes):
        raise ValueError("one reference per mode")
    W = np.stack([op.from_field(m.w) for m in modes], axis=1)
    Rf = np.stack([np.asarray(r.values if isinstance(r, ScalarField) else r)[op.mask] for r in references], axis=1)
    C = W.T @ (op.M[:, None] * Rf)
    U, _, Vt = np.linalg.svd(C)
    Q = U @ Vt
    out = []
    for j, m in enumerate(modes):
        v = W @ Q[:, j]
        w = op.to_field(v)
        out.append(EigenMode(m.eigenvalue, w, m.mask, m.cluster_id, m.multiplicity,
                             mode_residual(op, w, m.eigenvalue)))
    return out


def separable_reference(op: DiscreteOperator, m: int, n: int) -> ScalarField:
    """``sin(m pi x / a) sin(n pi y / b)`` on a rectangle grid."""
    g = op.grid
    if g.dim != 2 or op.problem.domain not in ("square", "rectangle"):
        raise ValueError("separable references exist for rectangles")
    x, y = g.mesh()
    a, b = g.length(0), g.length(1)
    return ScalarField(g, np.sin(m * np.pi * x / a) * np.sin(n * np.pi * y / b))


def separable_align(modes, op: DiscreteOperator) -> list:
    """Align every cluster of a Dirichlet rectangle with the product sines.

    Analytic modes ``(m, n)`` are ordered by eigenvalue, ties by ``m``; the
    k-th discrete mode is matched to the k-th analytic one, which holds for
    the low spectrum where the discrete ordering is unchanged.
    """
    p = op.problem
    if p.domain not in ("square", "rectangle") or p.bc != "dirichlet":
        raise ValueError("separable alignment needs a Dirichlet rectangle")
    a, b = op.grid.length(0), op.grid.length(1)
    top = len(modes) + 2
    pairs = sorted(((m * m / a**2 + n * n / b**2, m, n) for m in range(1, top + 1)
                    for n in range(1, top + 1)))[: len(modes)]
    out = list(modes)
    for cid in sorted({md.cluster_id for md in modes}):
        idx = [i for i, md in enumerate(modes) if md.cluster_id == cid]
        refs = [separable_reference(op, pairs[i][1], pairs[i][2]) for i in idx]
        for i, md in zip(idx, align_cluster([modes[i] for i in idx], op, refs)):
            out[i] = md
    return out


# ----------------------------------------------------------- nodal sets

@dataclass
class NodalSet:
    polylines: list                 # arrays of shape (P, 2)
    closed: list                    # bool per polyline
    periods: tuple = (None, None)   # period per axis for closed surfaces
    source: str = ""

    def __len__(self):
        return len(self.polylines)


def _edge_point(v0, v1):
    return v0 / (v0 - v1)


def nodal_set(w: ScalarField, mask=None, source: str = "") -> NodalSet:
    """Zero contour of a 2-D field by marching squares.

    Vertices sit on cell edges where the sign changes (linear
    interpolation); cells with any corner outside ``mask`` are skipped.
    Saddle cells are split according to the sign of the cell-centre mean.
    Periodic axes wrap, so nodal lines on closed surfaces come out closed.
    """
    g = w.grid
    if g.dim != 2:
        raise ValueError("nodal sets are extracted from 2-D fields")
    v = np.real(np.asarray(w.values, dtype=complex)) if np.iscomplexobj(w.values) else np.asarray(w.values, dtype=float)
    valid = np.ones(g.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not np.any(v[valid]):
        raise ValueError("degenerate field: identically zero")
    nx, ny = g.shape
    px, py = g.is_periodic(0), g.is_periodic(1)
    hx, hy = g.spacing
    ox, oy = g.origin
    pos = v > 0
    ci = nx if px else nx - 1
    cj = ny if py else ny - 1

    def node(i, j):
        return i % nx, j % ny

    def coords(e):
        kind, i, j = e
        i1, j1 = (i + 1, j) if kind == 0 else (i, j + 1)
        a, b = v[node(i, j)], v[node(i1, j1)]
        t = _edge_point(a, b)
        x = ox + hx * (i + t * (i1 - i))
        y = oy + hy * (j + t * (j1 - j))
        if px:
            x = ox + np.mod(x - ox, nx * hx)
        if py:
            y = oy + np.mod(y - oy, ny * hy)
        return x, y

    def edge_id(kind, i, j):
        return (kind, i % nx if px else i, j % ny if py else j)

    adj = {}

    def link(e1, e2):
        adj.setdefault(e1, []).append(e2)
        adj.setdefault(e2, []).append(e1)

    for i in range(ci):
        for j in range(cj):
            c = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]
            if not all(valid[k] for k in c):
                continue
            s = [pos[k] for k in c]
            if s[0] == s[1] == s[2] == s[3]:
                continue
            e = [edge_id(0, i, j), edge_id(1, i + 1, j), edge_id(0, i, j + 1), edge_id(1, i, j)]
            cross = [s[0] != s[1], s[1] != s[2], s[3] != s[2], s[0] != s[3]]
            hits = [e[k] for k in range(4) if cross[k]]
            if len(hits) == 2:
                link(hits[0], hits[1])
            else:
                centre = np.mean([v[k] for k in c]) > 0
                if centre == s[0]:
                    link(e[0], e[1])
                    link(e[2], e[3])
                else:
                    link(e[3], e[0])
                    link(e[1], e[2])

    lines, closed = [], []
    seen = set()

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in adj[cur] if n != prev and n not in seen]
            if not nxt:
                is_closed = len(chain) > 2 and start in adj[cur] and prev is not None
                return chain, is_closed
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)

    ends = sorted(e for e, nb in adj.items() if len(nb) == 1)
    for e in ends:
        if e not in seen:
            chain, _ = walk(e)
            lines.append(np.array([coords(k) for k in chain]))
            closed.append(False)
    for e in sorted(adj):
        if e not in seen:
            chain, is_closed = walk(e)
            lines.append(np.array([coords(k) for k in chain]))
            closed.append(is_closed)
    periods = (nx * hx if px else None, ny * hy if py else None)
    return NodalSet(lines, closed, periods, source)


def _segment_lengths(pts, periods, close):
    if len(pts) < 2:
        return np.zeros(0)
    seq = np.vstack([pts, pts[:1]]) if close else pts
    d = np.diff(seq, axis=0)
    for a, L in enumerate(periods):
        if L is not None:
            d[:, a] -= L * np.round(d[:, a] / L)
    return np.hypot(d[:, 0], d[:, 1])


def nodal_stats(s: NodalSet):
    """``(component count, closed count, total length)``."""
    total = 0.0
    for pts, c in zip(s.polylines, s.closed):
        total += float(_segment_lengths(pts, s.periods, c).sum())
    return len(s.polylines), int(sum(s.closed)), total


def edge_interpolation_error(w: ScalarField, s: NodalSet) -> float:
    """Largest ``|w|`` of the bilinear interpolant at nodal vertices.

    Every vertex lies on a grid edge, where the bilinear interpolant reduces
    to the linear one along the edge, so this is the vertex consistency check.
    """
    from .grid import interpolate
    g = w.grid
    pts = [p for p in s.polylines if len(p)]
    if not pts:
        return 0.0
    P = np.vstack(pts)
    vals = interpolate(g, np.asarray(w.values, dtype=float), P, kind="linear")
    return float(np.abs(vals).max())


# ----------------------------------------------------------- references

def bessel_zero(order: int = 0, index: int = 1) -> float:
    """``index``-th positive zero of ``J_order`` by bracketing and bisection."""
    from scipy.special import jv
    x, step, found = 1e-6, 0.05, 0
    f0 = jv(order, x)
    while True:
        x1 = x + step
        f1 = jv(order, x1)
        if np.sign(f1) != np.sign(f0) and f0 != 0:
            found += 1
            if found == index:
                lo, hi = x, x1
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if np.sign(jv(order, mid)) == np.sign(jv(order, lo)):
                        lo = mid
                    else:
                        hi = mid
                return 0.5 * (lo + hi)
        x, f0 = x1, f1
