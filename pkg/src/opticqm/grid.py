"""Uniform Cartesian grids, field containers and finite-difference operators.

Every field in the package lives on a :class:`Grid`.  Axes are either
``"periodic"`` (nodes at ``origin + i*h`` for ``i < n``, the last node does not
repeat the first) or ``"clamped"`` (nodes include both end points).

Derivative stencils are second order by default.  Fourth-order central
stencils are available on periodic axes through ``order=4``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PERIODIC = "periodic"
CLAMPED = "clamped"
DEFAULT_MAX_NODES = 2**26


class NonFiniteError(ValueError):
    """A field contains NaN or inf; ``index`` is the first offending node."""

    def __init__(self, index, what="field"):
        self.index = tuple(int(i) for i in index)
        super().__init__(f"non-finite value in {what} at index {self.index}")


class GridMismatchError(ValueError):
    pass


def check_finite(values: np.ndarray, what: str = "field") -> None:
    finite = np.isfinite(values)
    if not finite.all():
        raise NonFiniteError(np.argwhere(~finite)[0], what)


@dataclass(frozen=True)
class Grid:
    """Uniform lattice in 1, 2 or 3 dimensions."""

    origin: tuple
    spacing: tuple
    counts: tuple
    boundary: tuple
    max_nodes: int = field(default=DEFAULT_MAX_NODES, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        bnd = self.boundary
        if isinstance(bnd, str):
            bnd = (bnd,) * len(self.counts)
        object.__setattr__(self, "boundary", tuple(bnd))

        d = len(self.counts)
        if d not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {d}")
        if not (len(self.origin) == len(self.spacing) == len(self.boundary) == d):
            raise ValueError("origin, spacing, counts and boundary must have equal length")
        if any(n < 3 for n in self.counts):
            raise ValueError(f"need at least 3 nodes per axis, got {self.counts}")
        if any(not (h > 0 and np.isfinite(h)) for h in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if any(b not in (PERIODIC, CLAMPED) for b in self.boundary):
            raise ValueError(f"boundary kinds must be 'periodic' or 'clamped', got {self.boundary}")
        if self.size > self.max_nodes:
            raise ValueError(f"grid has {self.size} nodes, above the cap of {self.max_nodes}")

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], counts: Sequence[int],
            boundary="clamped", max_nodes: int = DEFAULT_MAX_NODES) -> "Grid":
        """Grid covering ``[lower, upper]`` per axis.

        On periodic axes ``upper`` is identified with ``lower`` and is not a node.
        """
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        counts = tuple(int(n) for n in np.atleast_1d(counts))
        if isinstance(boundary, str):
            boundary = (boundary,) * len(counts)
        spacing = []
        for lo, hi, n, b in zip(lower, upper, counts, boundary):
            if not hi > lo:
                raise ValueError("upper must exceed lower on every axis")
            spacing.append((hi - lo) / (n if b == PERIODIC else n - 1))
        return cls(tuple(lower), tuple(spacing), counts, tuple(boundary), max_nodes)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def h(self) -> float:
        """Smallest spacing."""
        return min(self.spacing)

    def is_periodic(self, axis: int) -> bool:
        return self.boundary[axis] == PERIODIC

    def axis(self, a: int) -> np.ndarray:
        return self.origin[a] + self.spacing[a] * np.arange(self.counts[a])

    def length(self, a: int) -> float:
        """Period on periodic axes, end-to-end extent on clamped ones."""
        n = self.counts[a] if self.is_periodic(a) else self.counts[a] - 1
        return n * self.spacing[a]

    def mesh(self) -> list:
        """Coordinate arrays, one per axis, ``indexing='ij'``."""
        return list(np.meshgrid(*(self.axis(a) for a in range(self.dim)), indexing="ij"))

    def mesh3(self) -> list:
        """Like :meth:`mesh` but always three arrays; missing axes are zero."""
        m = self.mesh()
        return m + [np.zeros(self.shape)] * (3 - self.dim)

    def interior_mask(self) -> np.ndarray:
        """True away from clamped edges (periodic axes have no edge)."""
        mask = np.ones(self.shape, dtype=bool)
        for a in range(self.dim):
            if not self.is_periodic(a):
                sl = [slice(None)] * self.dim
                sl[a] = 0
                mask[tuple(sl)] = False
                sl[a] = -1
                mask[tuple(sl)] = False
        return mask

    def refined(self, factor: int = 2) -> "Grid":
        """Same domain with spacing divided by ``factor``."""
        counts = []
        for a in range(self.dim):
            n = self.counts[a]
            counts.append(n * factor if self.is_periodic(a) else (n - 1) * factor + 1)
        spacing = [h / factor for h in self.spacing]
        return Grid(self.origin, spacing, counts, self.boundary, self.max_nodes)

    def header(self) -> dict:
        return {"dim": self.dim, "origin": list(self.origin), "spacing": list(self.spacing),
                "counts": list(self.counts), "boundary": list(self.boundary)}

    @classmethod
    def from_header(cls, hdr: dict) -> "Grid":
        return cls(hdr["origin"], hdr["spacing"], hdr["counts"], hdr["boundary"])


class ScalarField:
    """Values on every node of a grid.  Read-only once built."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values)
        if values.shape == ():
            values = np.full(grid.shape, values)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
        check_finite(values)
        values = values.view()
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.mesh()))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or not np.any(self.values.imag)

    @property
    def real(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.real)

    @property
    def imag(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.imag)

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, np.conj(self.values))

    def __repr__(self):
        return f"ScalarField(shape={self.grid.shape}, dtype={self.values.dtype})"


class VectorField3:
    """Three components on one grid, stored as an array of shape ``(3, *grid.shape)``."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, components):
        if isinstance(components, (list, tuple)):
            comps = []
            for c in components:
                if isinstance(c, ScalarField):
                    if c.grid != grid:
                        raise GridMismatchError("components must share the grid")
                    c = c.values
                comps.append(np.broadcast_to(np.asarray(c), grid.shape))
            components = np.stack(comps)
        values = np.asarray(components)
        if values.shape != (3,) + grid.shape:
            raise ValueError(f"components shape {values.shape} does not match (3, {grid.shape})")
        check_finite(values, "vector field")
        values = values.view()
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("VectorField3 is immutable")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField3":
        return cls(grid, list(fn(*grid.mesh3())))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    @property
    def x(self):
        return self.component(0)

    @property
    def y(self):
        return self.component(1)

    @property
    def z(self):
        return self.component(2)

    @property
    def real(self) -> "VectorField3":
        return VectorField3(self.grid, self.values.real)

    @property
    def imag(self) -> "VectorField3":
        return VectorField3(self.grid, self.values.imag)

    def conj(self) -> "VectorField3":
        return VectorField3(self.grid, np.conj(self.values))

    def norm(self) -> np.ndarray:
        """Pointwise Hermitian norm ``sqrt(v* . v)``."""
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))

    def __repr__(self):
        return f"VectorField3(shape={self.grid.shape}, dtype={self.values.dtype})"


def same_grid(*fields) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# ---------------------------------------------------------------- stencils

def diff(a: np.ndarray, axis: int, h: float, periodic: bool, order: int = 2) -> np.ndarray:
    """First derivative of array ``a`` along ``axis``."""
    if periodic:
        if order == 2:
            return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)
        if order == 4:
            return (8.0 * (np.roll(a, -1, axis) - np.roll(a, 1, axis))
                    - (np.roll(a, -2, axis) - np.roll(a, 2, axis))) / (12.0 * h)
        raise ValueError(f"unsupported stencil order {order}")
    if order != 2:
        raise ValueError("fourth-order stencils need periodic axes")
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h)
    out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def diff2(a: np.ndarray, axis: int, h: float, periodic: bool, order: int = 2) -> np.ndarray:
    """Second derivative of array ``a`` along ``axis``."""
    if periodic:
        if order == 2:
            return (np.roll(a, -1, axis) - 2.0 * a + np.roll(a, 1, axis)) / (h * h)
        if order == 4:
            return (16.0 * (np.roll(a, -1, axis) + np.roll(a, 1, axis)) - 30.0 * a
                    - (np.roll(a, -2, axis) + np.roll(a, 2, axis))) / (12.0 * h * h)
        raise ValueError(f"unsupported stencil order {order}")
    if order != 2:
        raise ValueError("fourth-order stencils need periodic axes")
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / (h * h)
    if a.shape[0] >= 4:
        out[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / (h * h)
        out[-1] = (2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]) / (h * h)
    else:
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis)


def _d(grid: Grid, a: np.ndarray, axis: int, order: int) -> np.ndarray:
    # `a` may carry leading component axes; grid axes are the trailing ones
    ax = a.ndim - grid.dim + axis
    return diff(a, ax, grid.spacing[axis], grid.is_periodic(axis), order)


# --------------------------------------------------------------- operators

def gradient(f: ScalarField, order: int = 2) -> VectorField3:
    """Gradient as a 3-vector; components along absent axes are zero."""
    g = f.grid
    comps = [_d(g, f.values, a, order) for a in range(g.dim)]
    comps += [np.zeros_like(comps[0])] * (3 - g.dim)
    return VectorField3(g, np.stack(comps))


def divergence(v: VectorField3, order: int = 2) -> ScalarField:
    g = v.grid
    out = _d(g, v.values[0], 0, order)
    for a in range(1, g.dim):
        out = out + _d(g, v.values[a], a, order)
    return ScalarField(g, out)


def curl_array(grid: Grid, v: np.ndarray, order: int = 2) -> np.ndarray:
    """Curl of a raw ``(3, nx, ny, nz)`` array on a 3-D grid."""
    if grid.dim != 3:
        raise ValueError("curl needs a 3-D grid")

    def d(i, a):
        return diff(v[i], a, grid.spacing[a], grid.is_periodic(a), order)

    return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def curl(v: VectorField3, order: int = 2) -> VectorField3:
    return VectorField3(v.grid, curl_array(v.grid, v.values, order))


def laplacian(f: ScalarField, order: int = 2) -> ScalarField:
    g = f.grid
    out = None
    for a in range(g.dim):
        term = diff2(f.values, a, g.spacing[a], g.is_periodic(a), order)
        out = term if out is None else out + term
    return ScalarField(g, out)


def vector_laplacian(v: VectorField3, order: int = 2) -> VectorField3:
    return VectorField3(v.grid, [laplacian(v.component(i), order).values for i in range(3)])


def quadrature_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights on clamped axes, rectangle weights on periodic ones."""
    w = np.ones(())
    for a in range(grid.dim):
        wa = np.full(grid.counts[a], grid.spacing[a])
        if not grid.is_periodic(a):
            wa[0] *= 0.5
            wa[-1] *= 0.5
        w = np.multiply.outer(w, wa)
    return w


def integrate(f, mask=None):
    """Volume integral of a ScalarField (or raw array on ``f.grid``).

    ``mask`` restricts the integral to a sub-domain (boolean array).
    """
    values = f.values
    check_finite(values)
    w = quadrature_weights(f.grid)
    if mask is not None:
        w = w * np.asarray(mask, dtype=float)
    total = np.sum(w * values)
    return complex(total) if np.iscomplexobj(values) else float(total)


def dot(u: VectorField3, v: VectorField3) -> ScalarField:
    """Bilinear (unconjugated) dot product."""
    same_grid(u, v)
    return ScalarField(u.grid, np.sum(u.values * v.values, axis=0))


def cross_array(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.stack([u[1] * v[2] - u[2] * v[1],
                     u[2] * v[0] - u[0] * v[2],
                     u[0] * v[1] - u[1] * v[0]])


def cross(u: VectorField3, v: VectorField3) -> VectorField3:
    same_grid(u, v)
    return VectorField3(u.grid, cross_array(u.values, v.values))


def max_norm(a, mask=None) -> float:
    a = np.abs(np.asarray(getattr(a, "values", a)))
    if mask is not None:
        a = a[..., mask]
    return float(a.max()) if a.size else 0.0


# ----------------------------------------------------------- interpolation

def _locate(grid: Grid, points: np.ndarray, axis: int, width: int):
    """Stencil start index and local coordinate for ``width``-point stencils."""
    h = grid.spacing[axis]
    n = grid.counts[axis]
    s = (points[:, axis] - grid.origin[axis]) / h
    if grid.is_periodic(axis):
        s = np.mod(s, n)
        i0 = np.floor(s).astype(int) - (width // 2 - 1)
    else:
        if np.any(s < -1e-9) or np.any(s > n - 1 + 1e-9):
            raise ValueError("interpolation point outside the grid")
        i0 = np.clip(np.floor(s).astype(int) - (width // 2 - 1), 0, n - width)
    t = s - i0
    idx = i0[:, None] + np.arange(width)[None, :]
    if grid.is_periodic(axis):
        idx = np.mod(idx, n)
    return idx, t


def _lagrange4(t):
    w = np.stack([-(t - 1) * (t - 2) * (t - 3) / 6.0,
                  t * (t - 2) * (t - 3) / 2.0,
                  -t * (t - 1) * (t - 3) / 2.0,
                  t * (t - 1) * (t - 2) / 6.0], axis=1)
    dw = np.stack([-(3 * t * t - 12 * t + 11) / 6.0,
                   (3 * t * t - 10 * t + 6) / 2.0,
                   -(3 * t * t - 8 * t + 3) / 2.0,
                   (3 * t * t - 6 * t + 2) / 6.0], axis=1)
    return w, dw


def _linear2(t):
    return np.stack([1.0 - t, t], axis=1), np.stack([-np.ones_like(t), np.ones_like(t)], axis=1)


def interpolate(grid: Grid, values: np.ndarray, points, kind: str = "cubic", gradient: bool = False):
    """Interpolate nodal ``values`` at ``points`` (shape ``(P, dim)``).

    ``kind='cubic'`` uses tensor-product 4-point Lagrange stencils (exact on
    cubic polynomials); ``kind='linear'`` is multilinear.  Leading component
    axes in ``values`` are carried through.  With ``gradient=True`` also
    returns the derivative of the interpolant, shape ``(..., P, dim)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.dim:
        raise ValueError("points must have one coordinate per grid axis")
    width = 4 if kind == "cubic" else 2
    basis = _lagrange4 if kind == "cubic" else _linear2
    lead = values.shape[: values.ndim - grid.dim]
    flat = values.reshape((-1,) + grid.shape)

    idxs, ws, dws = [], [], []
    for a in range(grid.dim):
        idx, t = _locate(grid, pts, a, width)
        w, dw = basis(t)
        idxs.append(idx)
        ws.append(w)
        dws.append(dw / grid.spacing[a])

    P = pts.shape[0]
    # gather the full stencil block for every point: shape (C, P, width, ..., width)
    grids = np.meshgrid(*[np.arange(width)] * grid.dim, indexing="ij")
    gather = tuple(idxs[a][:, grids[a].ravel()] for a in range(grid.dim))
    block = flat[(slice(None),) + gather].reshape((flat.shape[0], P) + (width,) * grid.dim)

    def contract(weights):
        out = block
        for a in reversed(range(grid.dim)):
            out = np.einsum("cp...k,pk->cp...", out, weights[a])
        return out

    val = contract(ws).reshape(lead + (P,))
    if not gradient:
        return val
    grads = []
    for a in range(grid.dim):
        wa = list(ws)
        wa[a] = dws[a]
        grads.append(contract(wa))
    grad = np.stack(grads, axis=-1).reshape(lead + (P, grid.dim))
    return val, grad
