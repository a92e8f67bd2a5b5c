"""Geometric optics: eikonal residuals, ray tracing and transport amplitudes.

Rays obey ``dx/dtau = grad(Phi)``.  Differentiating the eikonal
``|grad Phi|^2 = n^2`` along a ray gives the launch-condition form traced
here, ``d^2x/dtau^2 = grad(n^2)/2`` with ``|dx/dtau| = n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Grid, ScalarField, VectorField3, gradient, integrate, interpolate, laplacian


class MediumIndex:
    """Refractive index ``n(x)`` given through ``n^2`` and ``grad(n^2)``.

    Use the :meth:`constant`, :meth:`linear` and :meth:`sampled`
    constructors.  ``bounds`` is an optional ``(lower, upper)`` box; rays
    leaving it are truncated.
    """

    def __init__(self, n2, grad_n2, bounds=None, floor: float = 1e-6, description=None):
        self._n2 = n2
        self._grad_n2 = grad_n2
        self.bounds = None if bounds is None else (np.asarray(bounds[0], float),
                                                   np.asarray(bounds[1], float))
        self.floor = floor
        self.description = description or {}

    def n2(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        v = np.asarray(self._n2(x), dtype=float)
        if np.any(v < self.floor**2):
            raise ValueError("refractive index fell below the configured floor")
        return v

    def n(self, x) -> np.ndarray:
        return np.sqrt(self.n2(x))

    def grad_n2(self, x) -> np.ndarray:
        return np.asarray(self._grad_n2(np.atleast_2d(x)), dtype=float)

    def inside(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.bounds is None:
            return np.ones(len(x), dtype=bool)
        return np.all((x >= self.bounds[0]) & (x <= self.bounds[1]), axis=1)

    @classmethod
    def constant(cls, n: float = 1.0, bounds=None):
        if not n > 0:
            raise ValueError("index must be positive")
        return cls(lambda x: np.full(len(x), n * n), lambda x: np.zeros((len(x), 3)), bounds,
                   description={"kind": "constant", "n": n})

    @classmethod
    def linear(cls, n0sq: float, slope, bounds=None, origin=(0.0, 0.0, 0.0)):
        """``n^2 = n0sq + slope . (x - origin)``."""
        slope = np.asarray(slope, dtype=float)
        origin = np.asarray(origin, dtype=float)
        return cls(lambda x: n0sq + (x - origin) @ slope,
                   lambda x: np.broadcast_to(slope, (len(x), 3)).copy(), bounds,
                   description={"kind": "linear", "n0sq": n0sq, "slope": slope.tolist()})

    @classmethod
    def sampled(cls, n: ScalarField):
        """Index sampled on a 3-D grid; ``n^2`` is interpolated with cubic stencils."""
        g = n.grid
        if g.dim != 3:
            raise ValueError("sampled media need a 3-D grid")
        n2 = np.real(n.values) ** 2
        lower = np.array(g.origin)
        upper = lower + np.array([g.length(a) for a in range(3)])

        def grad(x):
            return interpolate(g, n2, x, gradient=True)[1]

        return cls(lambda x: interpolate(g, n2, x), grad, (lower, upper),
                   description={"kind": "sampled"})


@dataclass(frozen=True)
class RayPath:
    """Samples along one ray.

    ``J`` (bundle Jacobian), ``lap_phase`` (Laplacian of the eikonal) and
    ``amplitude`` are NaN until filled by :func:`ray_jacobian` and
    :func:`transport_amplitude`.
    """

    tau: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    phase: np.ndarray
    lap_phase: np.ndarray = None
    J: np.ndarray = None
    amplitude: np.ndarray = None
    caustic: np.ndarray = None
    exited: bool = False

    def __post_init__(self):
        n = len(self.tau)
        for name in ("lap_phase", "J", "amplitude"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.full(n, np.nan))
        if self.caustic is None:
            object.__setattr__(self, "caustic", np.zeros(n, dtype=bool))
        if n > 1 and np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau must be strictly increasing")

    def speed_defect(self, medium: MediumIndex) -> np.ndarray:
        """``|dx/dtau|^2 - n^2`` at every sample."""
        return np.sum(self.dx**2, axis=1) - medium.n2(self.x)

    def table(self) -> np.ndarray:
        """Columns ``tau, x, y, z, Phi, J, amplitude``."""
        return np.column_stack([self.tau, self.x, self.phase, self.J, self.amplitude])


def _rk4_rays(x, p, medium, tau0, dtau, nsteps):
    """Integrate a stack of rays (shape ``(R, 3)``); phase grows as ``n^2``."""
    R = len(x)
    xs = np.empty((nsteps + 1, R, 3))
    ps = np.empty((nsteps + 1, R, 3))
    phs = np.empty((nsteps + 1, R))
    xs[0], ps[0], phs[0] = x, p, 0.0

    def rhs(x, p):
        return p, 0.5 * medium.grad_n2(x), medium.n2(x)

    ph = np.zeros(R)
    last = nsteps
    for i in range(nsteps):
        k1x, k1p, k1f = rhs(x, p)
        k2x, k2p, k2f = rhs(x + 0.5 * dtau * k1x, p + 0.5 * dtau * k1p)
        k3x, k3p, k3f = rhs(x + 0.5 * dtau * k2x, p + 0.5 * dtau * k2p)
        k4x, k4p, k4f = rhs(x + dtau * k3x, p + dtau * k3p)
        x = x + dtau / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + dtau / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        ph = ph + dtau / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f)
        xs[i + 1], ps[i + 1], phs[i + 1] = x, p, ph
        if not np.all(medium.inside(x)):
            last = i
            break
    exited = last < nsteps
    tau = tau0 + dtau * np.arange(last + 1)
    return tau, xs[: last + 1], ps[: last + 1], phs[: last + 1], exited


def _steps(tau_span, dtau):
    t0, t1 = float(tau_span[0]), float(tau_span[1])
    if not (t1 > t0 and dtau > 0):
        raise ValueError("need tau_span[1] > tau_span[0] and dtau > 0")
    return t0, int(round((t1 - t0) / dtau))


def trace_ray(x0, dir0, medium: MediumIndex, tau_span=(0.0, 1.0), dtau: float = 1e-3,
              phase0: float = 0.0) -> RayPath:
    """RK4 ray from ``x0`` launched along ``dir0`` (rescaled to length ``n(x0)``)."""
    x0 = np.asarray(x0, dtype=float).reshape(1, 3)
    d = np.asarray(dir0, dtype=float).reshape(1, 3)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise ValueError("launch direction must be non-zero")
    p0 = d / nd * medium.n(x0)[:, None]
    t0, nsteps = _steps(tau_span, dtau)
    tau, xs, ps, phs, exited = _rk4_rays(x0, p0, medium, t0, dtau, nsteps)
    return RayPath(tau, xs[:, 0], ps[:, 0], phase0 + phs[:, 0], exited=exited)


# ------------------------------------------------------------ ray bundles

def plane_launch(direction, medium: MediumIndex):
    """Launch field of a plane wavefront: fixed direction, length ``n(x)``."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    return lambda x: u[None, :] * medium.n(x)[:, None]


def point_source_launch(source, medium: MediumIndex):
    """Launch field of a point source: radial direction, length ``n(x)``."""
    s = np.asarray(source, dtype=float)

    def launch(x):
        r = x - s[None, :]
        return r / np.linalg.norm(r, axis=1)[:, None] * medium.n(x)[:, None]

    return launch


def ray_jacobian(x0, launch, medium: MediumIndex, tau_span, dtau: float = 1e-3,
                 delta: float | None = None) -> RayPath:
    """Central ray plus six offset rays; fills ``J`` and ``lap_phase``.

    ``launch(x)`` returns the initial ``dx/dtau`` (the wavefront normal
    scaled by ``n``) at an array of points.  ``J = det(dx/dx0)`` by centred
    differences with offset ``delta``; ``lap_phase = tr(dp/dx0 (dx/dx0)^-1)``
    is the divergence of the ray direction field, obtained independently of
    ``J``.  Samples with ``J <= 0`` are flagged as caustics.
    """
    x0 = np.asarray(x0, dtype=float)
    if delta is None:
        if medium.bounds is not None:
            diam = float(np.linalg.norm(medium.bounds[1] - medium.bounds[0]))
        else:
            diam = max(1.0, float(np.linalg.norm(x0)))
        delta = 1e-4 * diam
    offsets = np.vstack([np.zeros(3), np.eye(3) * delta, -np.eye(3) * delta])
    starts = x0[None, :] + offsets
    p0 = launch(starts)
    t0, nsteps = _steps(tau_span, dtau)
    tau, xs, ps, phs, exited = _rk4_rays(starts, p0, medium, t0, dtau, nsteps)

    X = (xs[:, 1:4, :] - xs[:, 4:7, :]) / (2 * delta)   # [t, j, i] = dx_i/dx0_j
    P = (ps[:, 1:4, :] - ps[:, 4:7, :]) / (2 * delta)
    X = np.transpose(X, (0, 2, 1))
    P = np.transpose(P, (0, 2, 1))
    J = np.linalg.det(X)
    caustic = J <= 0
    lap = np.full(len(tau), np.nan)
    ok = ~caustic
    lap[ok] = np.trace(P[ok] @ np.linalg.inv(X[ok]), axis1=1, axis2=2)
    return RayPath(tau, xs[:, 0], ps[:, 0], phs[:, 0], lap, J, None, caustic, exited)


def integrated_jacobian(path: RayPath, lap_phase=None) -> np.ndarray:
    """``exp(int lap_phase dtau)``, the Jacobian recovered from the eikonal Laplacian."""
    lap = path.lap_phase if lap_phase is None else np.asarray(lap_phase, dtype=float)
    return np.exp(cumulative_trapezoid(lap, path.tau, initial=0.0))


def transport_amplitude(path: RayPath, v0: float = 1.0):
    """Amplitude along the ray by two routes.

    Returns ``(path_with_amplitude, by_divergence, by_jacobian)`` where
    ``by_divergence = v0 exp(-1/2 int lap_phase dtau)`` and
    ``by_jacobian = v0 / sqrt(J)``.  Caustic samples are NaN in the second;
    the first is NaN from the first caustic on.
    """
    if np.all(np.isnan(path.J)):
        raise ValueError("path has no Jacobian samples; build it with ray_jacobian")
    # the divergence integral is meaningless beyond the first caustic
    hit = np.flatnonzero(path.caustic)
    stop = hit[0] if len(hit) else len(path.tau)
    by_div = np.full(len(path.tau), np.nan)
    if stop > 0:
        lap = path.lap_phase[:stop]
        with np.errstate(over="ignore"):   # the amplitude blows up as J -> 0+
            by_div[:stop] = v0 * np.exp(-0.5 * cumulative_trapezoid(lap, path.tau[:stop], initial=0.0))
    by_jac = np.full(len(path.tau), np.nan)
    ok = ~path.caustic
    by_jac[ok] = v0 / np.sqrt(path.J[ok])
    return replace(path, amplitude=by_jac), by_div, by_jac


# ------------------------------------------------------- grid eikonal fields

@dataclass(frozen=True)
class EikonalSolution:
    """``V = amp * exp(i (k Phi - omega t))`` sampled on a grid."""

    phase: ScalarField
    amp: ScalarField
    k: float
    omega: float = field(default=None)
    normalized: bool = False

    def __post_init__(self):
        if self.phase.grid != self.amp.grid:
            raise ValueError("phase and amplitude must share a grid")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if np.any(np.real(self.amp.values) < 0):
            raise ValueError("amplitude must be non-negative")
        if self.omega is None:
            object.__setattr__(self, "omega", self.k)   # omega = c k with c = 1

    @property
    def grid(self) -> Grid:
        return self.phase.grid


def _node_points(grid: Grid) -> np.ndarray:
    return np.stack([m.ravel() for m in grid.mesh3()], axis=1)


def eikonal_residual(sol: EikonalSolution, medium: MediumIndex, exclude=None) -> float:
    """Max-norm of ``|grad Phi|^2 - n^2`` over interior nodes.

    ``exclude=(centre, radius)`` masks a ball, e.g. around a point source.
    """
    g = sol.grid
    grad = gradient(sol.phase).values.real
    n2 = medium.n2(_node_points(g)).reshape(g.shape)
    r = np.sum(grad**2, axis=0) - n2
    mask = g.interior_mask()
    if exclude is not None:
        centre, radius = exclude
        xs = g.mesh3()
        d2 = sum((xs[a] - centre[a]) ** 2 for a in range(3))
        mask &= d2 > radius**2
    return float(np.abs(r)[mask].max())


def normalize_amplitude(v: ScalarField, mask=None) -> ScalarField:
    """Scale ``v`` so that ``int_mask v^2 = 1``."""
    total = integrate(ScalarField(v.grid, np.abs(v.values) ** 2), mask)
    if not total > 0:
        raise ValueError("cannot normalise a vanishing amplitude")
    return ScalarField(v.grid, v.values / np.sqrt(total))


def geometric_density_current(sol: EikonalSolution):
    """``rho = v^2 / int v^2`` and ``j/E = v^2 grad(Phi) / 2``."""
    v2 = np.abs(sol.amp.values) ** 2
    total = integrate(ScalarField(sol.grid, v2))
    if not total > 0:
        raise ValueError("vanishing amplitude")
    grad = gradient(sol.phase).values.real
    return ScalarField(sol.grid, v2 / total), VectorField3(sol.grid, 0.5 * v2 * grad)


def eikonal_energy_density(sol: EikonalSolution, medium: MediumIndex) -> ScalarField:
    """Energy density in eikonal variables.

    ``eps = (k^2 v^2 + (k^2/n^2) v^2 (|grad Phi|^2 + |grad ln v|^2 / k^2)) / 2``,
    which tends to ``k^2 v^2`` for large ``k`` when the eikonal holds.
    """
    g = sol.grid
    v = np.real(sol.amp.values)
    if np.any(v <= 0):
        raise ValueError("energy density in eikonal form needs v > 0")
    gphi = gradient(sol.phase).values.real
    glnv = gradient(ScalarField(g, np.log(v))).values.real
    n2 = medium.n2(_node_points(g)).reshape(g.shape)
    k2 = sol.k**2
    eps = 0.5 * (k2 * v**2 + (k2 / n2) * v**2 * (np.sum(gphi**2, axis=0)
                                                 + np.sum(glnv**2, axis=0) / k2))
    return ScalarField(g, eps)


def transport_residual(sol: EikonalSolution) -> float:
    """Max-norm of ``grad Phi . grad v + v lap(Phi) / 2`` over interior nodes."""
    g = sol.grid
    gphi = gradient(sol.phase).values.real
    gv = gradient(sol.amp).values.real
    r = np.sum(gphi * gv, axis=0) + 0.5 * np.real(sol.amp.values) * laplacian(sol.phase).values.real
    return float(np.abs(r)[g.interior_mask()].max())
