"""Chandrasekhar-Kendall (Beltrami) fields, nodal centerlines, torus knots and links."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import jv

from .grid import (Grid, ScalarField, VectorField3, curl_array, divergence, gradient,
                   interpolate, laplacian, vector_laplacian)


@dataclass(frozen=True)
class CKField:
    """Monochromatic amplitude ``F`` with ``curl F = k F``."""

    F: VectorField3
    k: float
    m: int = 0
    kz: float = 0.0
    descriptor: str = ""

    @property
    def grid(self) -> Grid:
        return self.F.grid


@dataclass(frozen=True)
class RadialScalarPair:
    u1: ScalarField
    u2: ScalarField
    k2: float


@dataclass
class Curve3D:
    points: np.ndarray
    closed: bool = False
    winding: tuple | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")

    def __len__(self):
        return len(self.points)

    def segments(self) -> np.ndarray:
        """Segment vectors, including the closing one for closed curves."""
        p = self.points
        if self.closed:
            return np.roll(p, -1, axis=0) - p
        return np.diff(p, axis=0)

    @property
    def arc_length(self) -> float:
        return float(np.linalg.norm(self.segments(), axis=1).sum())

    def max_segment(self) -> float:
        s = self.segments()
        return float(np.linalg.norm(s, axis=1).max()) if len(s) else 0.0

    def reversed(self) -> "Curve3D":
        return Curve3D(self.points[::-1].copy(), self.closed, None)

    def repeated(self, times: int = 2) -> "Curve3D":
        """Traverse a closed curve ``times`` times."""
        if not self.closed:
            raise ValueError("only closed curves can be repeated")
        return Curve3D(np.vstack([self.points] * times), True, None)

    def transformed(self, rotation=None, shift=None) -> "Curve3D":
        p = self.points
        if rotation is not None:
            p = p @ np.asarray(rotation).T
        if shift is not None:
            p = p + np.asarray(shift)
        return Curve3D(p, self.closed, self.winding)


@dataclass
class LinkReport:
    c1: Curve3D
    c2: Curve3D
    raw: float
    linking_number: int
    gap: float
    reliable: bool


# ------------------------------------------------------------- CK fields

def _bessel_mode(j, gamma, rho, phi):
    """``J_j(gamma rho) exp(i j phi)``, regular at the axis for every integer j."""
    return jv(j, gamma * rho) * np.exp(1j * j * phi)


def ck_build_cylinder(grid: Grid, k: float, m: int = 1, kz: float = 0.0) -> CKField:
    """Cylindrical CK field from ``psi = J_m(gamma rho) e^{i m phi} e^{i kz z}``.

    ``F = k curl(psi z) + curl curl(psi z)`` with ``gamma^2 = k^2 - kz^2``;
    the result is scaled by ``-i/k`` so that for ``m = 1, kz = 0`` the
    radial scalar ``r.F`` is ``J_1(k rho) e^{i phi} (1 - i k z)``.
    """
    if grid.dim != 3:
        raise ValueError("CK fields live on 3-D grids")
    if not k > 0:
        raise ValueError("k must be positive")
    g2 = k * k - kz * kz
    if g2 <= 0:
        raise ValueError("evanescent radial profile: need k^2 > kz^2")
    gamma = np.sqrt(g2)
    x, y, z = grid.mesh()
    rho = np.hypot(x, y)
    phi = np.arctan2(y, x)
    axial = np.exp(1j * kz * z)
    psi = _bessel_mode(m, gamma, rho, phi) * axial
    lo = gamma * _bessel_mode(m - 1, gamma, rho, phi) * axial
    hi = -gamma * _bessel_mode(m + 1, gamma, rho, phi) * axial
    # (dx + i dy) psi = hi, (dx - i dy) psi = lo
    dx = 0.5 * (lo + hi)
    dy = 0.5j * (lo - hi)
    F = np.stack([k * dy + 1j * kz * dx,
                  -k * dx + 1j * kz * dy,
                  g2 * psi])
    F = F * (-1j / k)
    return CKField(VectorField3(grid, F), k, m, kz,
                   f"cylinder J_{m}, k={k:g}, kz={kz:g}")


def _rel_max(r, ref, mask):
    scale = float(np.abs(ref)[..., mask].max()) if ref is not None else 1.0
    num = float(np.abs(r)[..., mask].max())
    if scale == 0.0:
        return num
    return num / scale


def force_free_residual(f: CKField, order: int = 2) -> float:
    """``max|curl F - k F| / max|F|`` over interior nodes."""
    g = f.grid
    F = f.F.values
    mask = g.interior_mask()
    if not np.any(F):
        return 0.0
    return _rel_max(curl_array(g, F, order) - f.k * F, F, mask)


def divergence_residual(f: CKField, order: int = 2) -> float:
    """``max|div F| / (k max|F|)`` over interior nodes."""
    g = f.grid
    F = f.F.values
    if not np.any(F):
        return 0.0
    d = divergence(f.F, order).values
    return _rel_max(d, f.k * F, g.interior_mask())


def vector_helmholtz_residual(f: CKField) -> float:
    """``max|lap F + k^2 F| / (k^2 max|F|)``; every force-free field also solves this."""
    g = f.grid
    F = f.F.values
    if not np.any(F):
        return 0.0
    r = vector_laplacian(f.F).values + f.k**2 * F
    return _rel_max(r, f.k**2 * F, g.interior_mask())


def null_check(f: CKField):
    """``d1 = |E|^2 - |H|^2`` and ``d2 = E.H`` with ``E = sqrt2 Re F``, ``H = sqrt2 Im F``."""
    F = f.F.values
    E = np.sqrt(2.0) * F.real
    H = np.sqrt(2.0) * F.imag
    d1 = np.sum(E * E, axis=0) - np.sum(H * H, axis=0)
    d2 = np.sum(E * H, axis=0)
    return ScalarField(f.grid, d1), ScalarField(f.grid, d2)


def radial_scalar(f: CKField) -> RadialScalarPair:
    """``u = r.F`` split into real and imaginary parts."""
    x, y, z = f.grid.mesh()
    F = f.F.values
    u = x * F[0] + y * F[1] + z * F[2]
    if not np.any(np.abs(u) > 1e-14 * max(1.0, float(np.abs(F).max()))):
        raise ValueError("degenerate radial scalar: r.F vanishes identically")
    return RadialScalarPair(ScalarField(f.grid, u.real), ScalarField(f.grid, u.imag), f.k**2)


def radial_helmholtz_residual(p: RadialScalarPair):
    """``max|(lap + k^2) u_i| / (k^2 max|u_i|)`` over interior nodes for both parts."""
    g = p.u1.grid
    mask = g.interior_mask()
    out = []
    for u in (p.u1, p.u2):
        r = laplacian(u).values + p.k2 * u.values
        out.append(_rel_max(r, p.k2 * u.values, mask))
    return tuple(out)


# ------------------------------------------------------ nodal centerlines

@dataclass
class IntersectionReport:
    curves: list
    skipped: list = field(default_factory=list)   # (point, |grad u1 x grad u2|)
    seeds: int = 0


def _inside(g: Grid, p, margin=0.0):
    lo = np.asarray(g.origin)
    hi = lo + np.asarray(g.spacing) * (np.asarray(g.counts) - 1)
    return bool(np.all(p >= lo + margin) and np.all(p <= hi - margin))


def nodal_intersection(p: RadialScalarPair, eps_t: float | None = None, step: float | None = None,
                       tol: float = 1e-10, max_points: int = 100000) -> IntersectionReport:
    """Trace ``{u1 = 0} & {u2 = 0}`` by predictor-corrector continuation.

    Seeds are grid cells where both fields change sign.  Each seed is
    corrected onto the curve by min-norm Newton steps, then the curve is
    followed both ways along ``grad u1 x grad u2`` with a Newton corrector
    after every predictor step.  Points where the cross product falls below
    ``eps_t`` are skipped and recorded.
    """
    g = p.u1.grid
    if g.dim != 3:
        raise ValueError("nodal intersection needs 3-D fields")
    U = np.stack([np.asarray(p.u1.values, float), np.asarray(p.u2.values, float)])
    h = g.h
    step = 0.5 * h if step is None else step
    if eps_t is None:
        G1 = np.linalg.norm(gradient(p.u1).values, axis=0).max()
        G2 = np.linalg.norm(gradient(p.u2).values, axis=0).max()
        eps_t = 1e-6 * G1 * G2
    scale = float(np.abs(U).max())
    ftol = tol * max(scale, 1e-300)

    def evaluate(x):
        v, dv = interpolate(g, U, x[None, :], kind="cubic", gradient=True)
        return v[:, 0], dv[:, 0, :]

    def correct(x):
        for _ in range(50):
            v, J = evaluate(x)
            if np.max(np.abs(v)) < ftol:
                return x, J, True
            try:
                dx = J.T @ np.linalg.solve(J @ J.T, -v)
            except np.linalg.LinAlgError:
                return x, J, False
            x = x + dx
            if not _inside(g, x):
                return x, J, False
        v, J = evaluate(x)
        return x, J, bool(np.max(np.abs(v)) < ftol)

    # seed cells: both fields vanish somewhere on the cell (sign change or
    # an exact zero at a corner)
    sl = [(slice(0, -1), slice(1, None))] * 3
    corners = [U[:, sl[0][a], :, :][:, :, sl[1][b], :][:, :, :, sl[2][c]]
               for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    C = np.stack(corners)
    mn, mx = C.min(axis=0), C.max(axis=0)
    straddle = (mn <= 0) & (mx >= 0) & (mn < mx)
    cand = np.argwhere(straddle[0] & straddle[1])
    origin = np.asarray(g.origin)
    sp = np.asarray(g.spacing)
    consumed = np.zeros(tuple(n - 1 for n in g.counts), dtype=bool)
    report = IntersectionReport([], [], int(len(cand)))

    def mark(points):
        idx = np.floor((np.asarray(points) - origin) / sp).astype(int)
        for d in np.ndindex(3, 3, 3):
            j = idx + (np.array(d) - 1)
            ok = np.all((j >= 0) & (j < np.array(consumed.shape)), axis=1)
            consumed[tuple(j[ok].T)] = True

    for cell in cand:
        if consumed[tuple(cell)]:
            continue
        x0 = origin + (cell + 0.5) * sp
        x, J, ok = correct(x0)
        if not ok or not _inside(g, x):
            if _inside(g, x):
                nt = float(np.linalg.norm(np.cross(J[0], J[1])))
                if nt <= eps_t:
                    report.skipped.append((x, nt))
            consumed[tuple(cell)] = True
            continue
        t = np.cross(J[0], J[1])
        if np.linalg.norm(t) <= eps_t:
            report.skipped.append((x, float(np.linalg.norm(t))))
            consumed[tuple(cell)] = True
            continue
        branches = []
        closed = False
        for sign in (1.0, -1.0):
            pts = []
            xc, tc = x.copy(), sign * t / np.linalg.norm(t)
            for _ in range(max_points):
                xp = xc + step * tc
                if not _inside(g, xp):
                    break
                xn, Jn, ok = correct(xp)
                if not ok or not _inside(g, xn):
                    break
                tn = np.cross(Jn[0], Jn[1])
                nt = np.linalg.norm(tn)
                if nt <= eps_t:
                    report.skipped.append((xn, float(nt)))
                    break
                tn = tn / nt
                if np.dot(tn, tc) < 0:
                    tn = -tn
                pts.append(xn)
                xc, tc = xn, tn
                if len(pts) > 3 and np.linalg.norm(xn - x) < 0.75 * step:
                    closed = True
                    break
            branches.append(pts)
            if closed:
                break
        if closed:
            pts = [x] + branches[0][:-1]
        else:
            pts = branches[1][::-1] + [x] + branches[0]
        pts = np.array(pts)
        mark(pts)
        consumed[tuple(cell)] = True
        if len(pts) >= 2:
            report.curves.append(Curve3D(pts, closed))
    return report


# ------------------------------------------------------------ torus fields

def torus_field(grid: Grid, slope: float, R: float = 1.0) -> VectorField3:
    """Field tangent to every torus around the circle of radius ``R`` in z=0.

    ``v = dX/dtheta + slope dX/dphi`` for the nested tori
    ``X = ((R + r cos phi) cos theta, (R + r cos phi) sin theta, r sin phi)``,
    so every field line winds with ``dphi/dtheta = slope``.
    """
    x, y, z = grid.mesh()
    rho = np.hypot(x, y)
    safe = np.where(rho > 0, rho, 1.0)
    c, s = x / safe, y / safe
    vx = -y - slope * z * c
    vy = x - slope * z * s
    vz = slope * (rho - R)
    return VectorField3(grid, [vx, vy, vz])


def torus_angles(points, R: float = 1.0, center=(0.0, 0.0, 0.0)):
    """Toroidal angle theta, poloidal angle phi and tube radius r of points."""
    p = np.asarray(points, float) - np.asarray(center, float)
    rho = np.hypot(p[:, 0], p[:, 1])
    theta = np.arctan2(p[:, 1], p[:, 0])
    phi = np.arctan2(p[:, 2], rho - R)
    r = np.hypot(rho - R, p[:, 2])
    return theta, phi, r


class StagnationError(RuntimeError):
    pass


def trace_field_line(v: VectorField3, x0, max_length: float, step: float | None = None,
                     closure: float | None = None, cosine: float = 0.99,
                     floor: float = 1e-10) -> Curve3D:
    """Streamline of ``dx/ds = v/|v|`` by RK4 on the trilinear interpolant.

    The line is closed when it comes back within ``closure`` (default 2h)
    of ``x0`` heading within ``acos(cosine)`` of the initial direction; it is
    truncated at the closest approach.  Otherwise it stops open at
    ``max_length`` or at the grid boundary.
    """
    g = v.grid
    V = np.asarray(v.values, dtype=float)
    step = g.h / 4 if step is None else step
    closure = 2 * g.h if closure is None else closure

    def unit(x):
        w = interpolate(g, V, x[None, :], kind="linear")[:, 0]
        n = np.linalg.norm(w)
        if n < floor:
            raise StagnationError(f"field speed {n:.3e} below floor at {x}")
        return w / n

    x = np.asarray(x0, dtype=float)
    t0 = unit(x)
    pts = [x]
    travelled = 0.0
    nsteps = int(np.ceil(max_length / step))
    best = None
    for _ in range(nsteps):
        k1 = unit(x)
        k2 = unit(x + 0.5 * step * k1)
        k3 = unit(x + 0.5 * step * k2)
        k4 = unit(x + step * k3)
        xn = x + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not _inside(g, xn):
            break
        travelled += step
        x = xn
        pts.append(x)
        if travelled > 4 * closure:
            d = np.linalg.norm(x - pts[0])
            if d < closure and np.dot(unit(x), t0) > cosine:
                if best is None or d < best[1]:
                    best = (len(pts) - 1, d)
            elif best is not None:
                break
    if best is not None:
        return Curve3D(np.array(pts[: best[0]]), True)
    return Curve3D(np.array(pts), False)


def _accumulated(angle, closed):
    a = np.unwrap(angle)
    total = a[-1] - a[0]
    if closed:
        d = angle[0] - angle[-1]
        total += (d + np.pi) % (2 * np.pi) - np.pi
    return total


def torus_winding(c: Curve3D, R: float = 1.0, center=(0.0, 0.0, 0.0), tube: float | None = None,
                  tol: float = 1e-3):
    """Toroidal and poloidal winding numbers ``(p, q)`` of a closed curve."""
    if not c.closed:
        raise ValueError("winding numbers need a closed curve")
    theta, phi, r = torus_angles(c.points, R, center)
    tube = R if tube is None else tube
    if np.any(r >= tube):
        raise ValueError("curve leaves the tube around the torus core")
    wp = _accumulated(theta, True) / (2 * np.pi)
    wq = _accumulated(phi, True) / (2 * np.pi)
    p, q = int(round(wp)), int(round(wq))
    if abs(wp - p) > tol or abs(wq - q) > tol:
        raise ValueError(f"non-integer winding ({wp:.6f}, {wq:.6f})")
    c.winding = (p, q)
    return p, q


def rational_slope(c: Curve3D, R: float = 1.0, center=(0.0, 0.0, 0.0), max_den: int = 12) -> Fraction:
    """Measured ``dphi/dtheta`` rationalised by continued fractions."""
    theta, phi, _ = torus_angles(c.points, R, center)
    dt = _accumulated(theta, c.closed)
    if dt == 0:
        raise ValueError("curve does not advance toroidally")
    return Fraction(_accumulated(phi, c.closed) / dt).limit_denominator(max_den)


def parse_rational(text: str) -> Fraction:
    """``'3/2'``, ``'0.5'`` or ``'2'`` as an exact fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


# ----------------------------------------------------------------- links

def circle(center, normal, radius: float = 1.0, n: int = 256, start=None) -> Curve3D:
    """Closed polygon with ``n`` vertices on a circle; orientation follows ``normal``."""
    nrm = np.asarray(normal, float)
    nrm = nrm / np.linalg.norm(nrm)
    if start is None:
        a = np.array([1.0, 0.0, 0.0]) if abs(nrm[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = a - nrm * np.dot(a, nrm)
    else:
        e1 = np.asarray(start, float)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(nrm, e1)
    t = 2 * np.pi * np.arange(n) / n
    pts = np.asarray(center, float) + radius * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
    return Curve3D(pts, True)


def hopf_pair(n: int = 512):
    """Unit circle in z=0 about the origin, and the unit circle in the xz-plane about (1,0,0)."""
    c1 = circle((0, 0, 0), (0, 0, 1), 1.0, n, start=(1, 0, 0))
    c2 = circle((1, 0, 0), (0, 1, 0), 1.0, n, start=(1, 0, 0))
    return c1, c2


def _min_distance(a, b, chunk=512):
    best = np.inf
    for i in range(0, len(a), chunk):
        d = np.linalg.norm(a[i:i + chunk, None, :] - b[None, :, :], axis=2)
        best = min(best, float(d.min()))
    return best


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def gauss_integral(c1: Curve3D, c2: Curve3D, chunk: int = 256) -> float:
    """Gauss double integral over segment pairs, each pair by its exact solid angle."""
    p1 = c1.points
    q1 = np.roll(p1, -1, axis=0)
    p2 = c2.points
    q2 = np.roll(p2, -1, axis=0)
    total = 0.0
    for i in range(0, len(p1), chunk):
        a = p1[i:i + chunk, None, :]
        b = q1[i:i + chunk, None, :]
        c = p2[None, :, :]
        d = q2[None, :, :]
        r13, r14, r23, r24 = c - a, d - a, c - b, d - b
        n1 = _unit(np.cross(r13, r14))
        n2 = _unit(np.cross(r14, r24))
        n3 = _unit(np.cross(r24, r23))
        n4 = _unit(np.cross(r23, r13))

        def asin(u, w):
            return np.arcsin(np.clip(np.sum(u * w, axis=-1), -1.0, 1.0))

        omega = asin(n1, n2) + asin(n2, n3) + asin(n3, n4) + asin(n4, n1)
        sgn = np.sign(np.sum(np.cross(d - c, b - a) * r13, axis=-1))
        total += float(np.sum(omega * sgn))
    return total / (4 * np.pi)


def linking_number(c1: Curve3D, c2: Curve3D, spacing_factor: float = 3.0) -> LinkReport:
    """Linking number of two closed polygons."""
    if not (c1.closed and c2.closed):
        raise ValueError("linking number needs two closed curves")
    seg = max(c1.max_segment(), c2.max_segment())
    dist = _min_distance(c1.points, c2.points)
    if dist <= spacing_factor * seg:
        raise ValueError(f"curves too close: distance {dist:.3e} vs {spacing_factor}x segment {seg:.3e}")
    raw = gauss_integral(c1, c2)
    lk = int(round(raw))
    gap = abs(raw - lk)
    return LinkReport(c1, c2, raw, lk, gap, gap < 0.1)


def resample(c: Curve3D, n: int) -> Curve3D:
    """Resample a closed curve to ``n`` points uniform in arc length."""
    if not c.closed:
        raise ValueError("resampling is implemented for closed curves")
    p = np.vstack([c.points, c.points[:1]])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    t = np.linspace(0.0, s[-1], n, endpoint=False)
    return Curve3D(np.stack([np.interp(t, s, p[:, a]) for a in range(3)], axis=1), True)
