"""Riemann-Silberstein vector, photon wavefunction and its curl evolution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (Grid, GridMismatchError, ScalarField, VectorField3, cross_array,
                   curl_array, diff, integrate)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class RSField:
    """``F = (E + i*helicity*H)/sqrt(2)`` on a 3-D grid."""

    F: VectorField3
    helicity: int = 1
    c: float = 1.0

    def __post_init__(self):
        if self.helicity not in (1, -1):
            raise ValueError(f"helicity must be +1 or -1, got {self.helicity}")
        if not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def grid(self) -> Grid:
        return self.F.grid

    @property
    def E(self) -> VectorField3:
        return VectorField3(self.grid, SQRT2 * self.F.values.real)

    @property
    def H(self) -> VectorField3:
        return VectorField3(self.grid, self.helicity * SQRT2 * self.F.values.imag)


@dataclass(frozen=True)
class PhotonState:
    psi: VectorField3
    energy: float

    def norm(self) -> float:
        return integrate(ScalarField(self.psi.grid, np.sum(np.abs(self.psi.values) ** 2, axis=0)))


def rs_build(E: VectorField3, H: VectorField3, helicity: int = 1, c: float = 1.0) -> RSField:
    if E.grid != H.grid:
        raise GridMismatchError("E and H must share a grid")
    if np.iscomplexobj(E.values) or np.iscomplexobj(H.values):
        if np.any(np.imag(E.values)) or np.any(np.imag(H.values)):
            raise ValueError("E and H must be real-valued")
    F = (np.real(E.values) + 1j * helicity * np.real(H.values)) / SQRT2
    return RSField(VectorField3(E.grid, F), helicity, c)


def energy_density(f: RSField) -> ScalarField:
    """``F* . F``, equal to ``(E^2 + H^2)/2``."""
    return ScalarField(f.grid, np.sum(np.abs(f.F.values) ** 2, axis=0))


def total_energy(f: RSField) -> float:
    return integrate(energy_density(f))


def photon_normalize(f: RSField) -> PhotonState:
    energy = total_energy(f)
    if not energy > 0:
        raise ValueError("null total energy: cannot normalize a zero field")
    return PhotonState(VectorField3(f.grid, f.F.values / np.sqrt(energy)), energy)


def _check_evolvable(f: RSField, dt: float, order: int):
    g = f.grid
    if g.dim != 3 or not all(g.is_periodic(a) for a in range(3)):
        raise ValueError("evolution needs a fully periodic 3-D grid")
    limit = 0.5 * g.h / f.c
    if not (0 < dt <= limit * (1 + 1e-12)):
        raise ValueError(f"CFL violation: dt={dt} exceeds 0.5*h/c={limit}")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")


def _rk4_step(g, F, rate, dt, order):
    def rhs(u):
        return rate * curl_array(g, u, order)

    k1 = rhs(F)
    k2 = rhs(F + 0.5 * dt * k1)
    k3 = rhs(F + 0.5 * dt * k2)
    k4 = rhs(F + dt * k3)
    return F + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_series(f: RSField, dt: float, steps: int, order: int = 2, every: int = 1) -> list:
    """States at ``t = 0, every*dt, 2*every*dt, ...`` up to ``steps*dt``.

    Integrates ``dF/dt = -i*helicity*c*curl F`` with classical RK4.  For
    helicity +1 this is the photon equation ``i dF/dt = c curl F``; the
    helicity factor keeps the Maxwell curl equations intact for both signs.
    """
    _check_evolvable(f, dt, order)
    g = f.grid
    rate = -1j * f.helicity * f.c
    F = np.array(f.F.values, dtype=complex)
    out = [f]
    for n in range(1, steps + 1):
        F = _rk4_step(g, F, rate, dt, order)
        if n % every == 0:
            out.append(RSField(VectorField3(g, F.copy()), f.helicity, f.c))
    return out


def evolve(f: RSField, dt: float, steps: int, order: int = 2) -> RSField:
    return evolve_series(f, dt, steps, order, every=max(steps, 1))[-1]


def probability_current(f: RSField, energy: float, method: str = "EH") -> VectorField3:
    """``j = (c/energy) E x H``.

    ``method='rs'`` evaluates the same quantity from the complex vector as
    ``-i*helicity*(c/energy) F* x F``, since ``F* x F = i*helicity*E x H``.
    """
    if method == "EH":
        j = cross_array(f.E.values, f.H.values)
    elif method == "rs":
        j = (-1j * f.helicity * cross_array(np.conj(f.F.values), f.F.values)).real
    else:
        raise ValueError("method must be 'EH' or 'rs'")
    return VectorField3(f.grid, (f.c / energy) * j)


def continuity_residual(states, dt: float, energy: float | None = None) -> float:
    """Max-norm of ``d(rho)/dt + div j`` at interior time samples.

    ``rho = F*.F / energy`` with ``energy`` frozen at the first state unless
    given.  Time derivatives are centred differences over the snapshot list.
    """
    if len(states) < 3:
        raise ValueError("continuity audit needs at least 3 snapshots")
    g = states[0].grid
    if energy is None:
        energy = total_energy(states[0])
    rho = [energy_density(s).values / energy for s in states]
    interior = g.interior_mask()
    worst = 0.0
    for n in range(1, len(states) - 1):
        drho = (rho[n + 1] - rho[n - 1]) / (2.0 * dt)
        j = probability_current(states[n], energy).values
        div = sum(diff(j[a], a, g.spacing[a], g.is_periodic(a)) for a in range(g.dim))
        worst = max(worst, float(np.abs(drho + div)[interior].max()))
    return worst


def circular_plane_wave(grid: Grid, k_index: int = 1, amplitude: float = 1.0,
                        helicity: int = 1, c: float = 1.0, t: float = 0.0) -> RSField:
    """Circularly polarised wave ``F0 exp(i(kz - wt))`` along z, ``curl F = helicity*k*F``.

    ``k = 2*pi*k_index/Lz`` so the wave is periodic on the grid.
    """
    x, y, z = grid.mesh()
    k = 2.0 * np.pi * k_index / grid.length(2)
    w = c * k
    pol = np.array([1.0, 1j * helicity, 0.0]) / SQRT2
    phase = np.exp(1j * (k * z - w * t))
    return RSField(VectorField3(grid, amplitude * pol[:, None, None, None] * phase), helicity, c)
