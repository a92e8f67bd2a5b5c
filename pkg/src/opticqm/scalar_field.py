"""Complex scalar potential: energy density, flux and Klein-Gordon observables.

Time derivatives are supplied by the caller (``ScalarState.Vdot``); only the
residual audits difference snapshot series in time.  The metric signature
is (+,-,-,-) and ``x^0 = c t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (Grid, ScalarField, VectorField3, diff, diff2, gradient, integrate,
                   laplacian, same_grid)


@dataclass(frozen=True)
class ScalarState:
    V: ScalarField
    Vdot: ScalarField
    c: float = 1.0
    m: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        same_grid(self.V, self.Vdot)
        if self.m < 0:
            raise ValueError("mass must be non-negative")
        if not (self.c > 0 and self.hbar > 0):
            raise ValueError("c and hbar must be positive")

    @property
    def grid(self) -> Grid:
        return self.V.grid


@dataclass(frozen=True)
class StationaryAnsatz:
    """``phi = psi(x) exp(-i omega t)`` reduced to ``(lap + mt2) psi = 0``."""

    psi: ScalarField
    omega: float
    mt2: float

    @property
    def evanescent(self) -> bool:
        return self.mt2 < 0


def _grad(f: ScalarField) -> np.ndarray:
    return gradient(f).values


def scalar_energy_density(s: ScalarState) -> ScalarField:
    """``(|Vdot|^2/c^2 + |grad V|^2) / 2``."""
    g = _grad(s.V)
    eps = 0.5 * (np.abs(s.Vdot.values) ** 2 / s.c**2 + np.sum(np.abs(g) ** 2, axis=0))
    return ScalarField(s.grid, eps)


def scalar_flux(s: ScalarState) -> VectorField3:
    """``-(Vdot* grad V + Vdot grad V*)/2``, which is ``-Re(Vdot* grad V)``."""
    g = _grad(s.V)
    return VectorField3(s.grid, -np.real(np.conj(s.Vdot.values) * g))


def _interior_times(states, dt):
    if len(states) < 3:
        raise ValueError("residual audit needs at least 3 snapshots")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return range(1, len(states) - 1)


def continuity_residual_scalar(states, dt: float) -> float:
    """Max-norm of ``d(eps)/dt + div j`` over interior nodes and times."""
    times = _interior_times(states, dt)
    g = states[0].grid
    eps = [scalar_energy_density(s).values for s in states]
    interior = g.interior_mask()
    worst = 0.0
    for n in times:
        j = scalar_flux(states[n]).values
        div = sum(diff(j[a], a, g.spacing[a], g.is_periodic(a)) for a in range(g.dim))
        r = (eps[n + 1] - eps[n - 1]) / (2.0 * dt) + div
        worst = max(worst, float(np.abs(r)[interior].max()))
    return worst


def stress_energy(s: ScalarState):
    """``T00 = |d0 phi|^2 + |grad phi|^2`` and ``T0i = -(d0 phi* di phi + d0 phi di phi*)``.

    ``d0 = (1/c) d/dt``.  Note ``T00`` is twice the energy density of
    :func:`scalar_energy_density`, and ``T0i`` is twice the flux divided by c.
    """
    d0 = s.Vdot.values / s.c
    g = _grad(s.V)
    t00 = np.abs(d0) ** 2 + np.sum(np.abs(g) ** 2, axis=0)
    t0i = -2.0 * np.real(np.conj(d0) * g)
    return ScalarField(s.grid, t00), VectorField3(s.grid, t0i)


def kg_current(s: ScalarState, normalized: bool = False):
    """Charge density ``J0`` and the spatial current vector ``J^k``.

    ``J_mu = i(phi* d_mu phi - d_mu phi* phi)``.  The spatial part is
    returned with the index raised (``J^k = -J_k``) so that
    ``d_t J0 / c + div J = 0``.  With ``normalized`` both are scaled by
    ``hbar/(2m)``.
    """
    if normalized and not s.m > 0:
        raise ValueError("normalized current needs m > 0")
    phi = s.V.values
    d0 = s.Vdot.values / s.c
    j0 = -2.0 * np.imag(np.conj(phi) * d0)
    jk = 2.0 * np.imag(np.conj(phi) * _grad(s.V))
    if normalized:
        f = s.hbar / (2.0 * s.m)
        j0, jk = f * j0, f * jk
    return ScalarField(s.grid, j0), VectorField3(s.grid, jk)


def total_charge(J0: ScalarField) -> float:
    q = integrate(J0)
    return float(np.real(q))


def dalembert_residual(states, dt: float) -> float:
    """Max-norm of ``Vtt/c^2 - lap V + m^2 V`` from centred time differences."""
    times = _interior_times(states, dt)
    s0 = states[0]
    interior = s0.grid.interior_mask()
    worst = 0.0
    for n in times:
        vtt = (states[n + 1].V.values - 2.0 * states[n].V.values + states[n - 1].V.values) / dt**2
        r = vtt / s0.c**2 - laplacian(states[n].V).values + s0.m**2 * states[n].V.values
        worst = max(worst, float(np.abs(r)[interior].max()))
    return worst


def helmholtz_reduce(s: ScalarState, omega: float) -> StationaryAnsatz:
    """Reduce the K-G state to its spatial part under ``exp(-i omega t)``.

    ``mt2 = omega^2/c^2 - m^2``; a negative value marks an evanescent profile.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    return StationaryAnsatz(s.V, omega, omega**2 / s.c**2 - s.m**2)


def helmholtz_residual(psi: ScalarField, mt2: float) -> float:
    r = laplacian(psi).values + mt2 * psi.values
    return float(np.abs(r)[psi.grid.interior_mask()].max())


# ------------------------------------------------------------- constructors

def stationary_state(psi: ScalarField, omega: float, c: float = 1.0, m: float = 0.0,
                     hbar: float = 1.0) -> ScalarState:
    """State of ``psi(x) exp(-i omega t)`` at ``t = 0``."""
    return ScalarState(psi, ScalarField(psi.grid, -1j * omega * psi.values), c, m, hbar)


def plane_wave_state(grid: Grid, k, omega: float, t: float = 0.0, amplitude: complex = 1.0,
                     c: float = 1.0, m: float = 0.0, hbar: float = 1.0) -> ScalarState:
    """``A exp(i(k.x - omega t))`` with its exact time derivative."""
    k = np.asarray(k, dtype=float)
    xs = grid.mesh3()
    phase = sum(k[a] * xs[a] for a in range(3)) - omega * t
    V = amplitude * np.exp(1j * phase)
    return ScalarState(ScalarField(grid, V), ScalarField(grid, -1j * omega * V), c, m, hbar)


def evolve_kg(s: ScalarState, dt: float, steps: int, every: int = 1) -> list:
    """RK4 for ``Vtt = c^2 (lap V - m^2 V)`` on the state's grid."""
    g = s.grid
    c2, m2 = s.c**2, s.m**2

    def lap(v):
        out = diff2(v, 0, g.spacing[0], g.is_periodic(0))
        for a in range(1, g.dim):
            out = out + diff2(v, a, g.spacing[a], g.is_periodic(a))
        return out

    def rhs(v, w):
        return w, c2 * (lap(v) - m2 * v)

    v = np.array(s.V.values, dtype=complex)
    w = np.array(s.Vdot.values, dtype=complex)
    out = [s]
    for n in range(1, steps + 1):
        k1v, k1w = rhs(v, w)
        k2v, k2w = rhs(v + 0.5 * dt * k1v, w + 0.5 * dt * k1w)
        k3v, k3w = rhs(v + 0.5 * dt * k2v, w + 0.5 * dt * k2w)
        k4v, k4w = rhs(v + dt * k3v, w + dt * k3w)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        w = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if n % every == 0:
            out.append(ScalarState(ScalarField(g, v.copy()), ScalarField(g, w.copy()),
                                   s.c, s.m, s.hbar))
    return out
