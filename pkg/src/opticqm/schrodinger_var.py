"""Variational ground states: the functional J, Rayleigh-quotient descent and audits.

Wavefunctions are real, live on clamped grids and vanish on the walls of the
box.  ``int (grad psi)^2`` is the edge sum of squared differences, which is
the quadratic form of the 3-point (5-point, 7-point) Laplacian; with it the
integral identities hold exactly at discrete eigenpairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .grid import CLAMPED, Grid, ScalarField, laplacian


@dataclass(frozen=True)
class Potential:
    """``V`` as a callable of the mesh coordinates or as samples on a grid."""

    V: object
    lower: tuple = (0.0,)
    upper: tuple = (1.0,)
    m: float = 1.0
    hbar: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not (self.m > 0 and self.hbar > 0):
            raise ValueError("m and hbar must be positive")
        if len(self.lower) != len(self.upper) or any(a >= b for a, b in zip(self.lower, self.upper)):
            raise ValueError("box needs lower < upper on every axis")

    @classmethod
    def box(cls, lower=(0.0,), upper=(1.0,), m=1.0, hbar=1.0):
        return cls(lambda *xs: np.zeros_like(xs[0]), tuple(lower), tuple(upper), m, hbar, "box")

    @classmethod
    def harmonic(cls, omega=1.0, half_width=8.0, dim=1, m=1.0, hbar=1.0):
        def V(*xs):
            return 0.5 * m * omega**2 * sum(x * x for x in xs)
        return cls(V, (-half_width,) * dim, (half_width,) * dim, m, hbar, "harmonic")

    @classmethod
    def sampled(cls, field: ScalarField, m=1.0, hbar=1.0):
        g = field.grid
        up = tuple(o + s * (n - 1) for o, s, n in zip(g.origin, g.spacing, g.counts))
        return cls(np.asarray(field.values, dtype=float), tuple(g.origin), up, m, hbar, "sampled")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def grid(self, h: float) -> Grid:
        counts = [int(round((b - a) / h)) + 1 for a, b in zip(self.lower, self.upper)]
        return Grid.box(self.lower, self.upper, counts, CLAMPED)

    def sample(self, grid: Grid) -> np.ndarray:
        if callable(self.V):
            v = np.asarray(self.V(*grid.mesh()), dtype=float) * np.ones(grid.shape)
        else:
            v = np.asarray(self.V, dtype=float)
            if v.shape != grid.shape:
                raise ValueError("sampled potential does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be finite (bounded below) on the domain")
        return v


@dataclass
class VariationalState:
    psi: ScalarField
    E: float
    log: list = field(default_factory=list)    # Rayleigh quotient per accepted step
    residuals: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


class MinimizationError(RuntimeError):
    def __init__(self, message, best: VariationalState):
        super().__init__(message)
        self.best = best


# ------------------------------------------------------------ quadratures

def _cell_volume(g: Grid) -> float:
    return float(np.prod(g.spacing))


def dirichlet_energy(psi: ScalarField) -> float:
    """``int (grad psi)^2`` as the edge sum of squared differences."""
    g = psi.grid
    v = np.asarray(psi.values, dtype=float)
    vol = _cell_volume(g)
    return float(sum(np.sum(np.diff(v, axis=a) ** 2) / g.spacing[a] ** 2 for a in range(g.dim)) * vol)


def _weights(g: Grid) -> np.ndarray:
    from .grid import quadrature_weights
    return quadrature_weights(g)


def norm2(psi: ScalarField) -> float:
    return float(np.sum(_weights(psi.grid) * np.asarray(psi.values, dtype=float) ** 2))


def functional_J(psi: ScalarField, pot: Potential, E: float, check_norm: bool = False) -> float:
    """``J = 1/2 int[(grad psi)^2 - 2m(E - V) psi^2 / hbar^2]``.

    With ``check_norm`` a violated normalisation raises instead of returning.
    """
    if np.iscomplexobj(psi.values) and np.any(np.imag(psi.values)):
        raise ValueError("psi must be real")
    g = psi.grid
    V = pot.sample(g)
    w = _weights(g)
    p = np.asarray(np.real(psi.values), dtype=float)
    if check_norm and abs(np.sum(w * p * p) - 1.0) > 1e-10:
        raise ValueError("normalization violated: int psi^2 != 1")
    pot_term = 2 * pot.m / pot.hbar**2 * np.sum(w * (E - V) * p * p)
    return 0.5 * (dirichlet_energy(ScalarField(g, p)) - pot_term)


def hj_integral_identity(state: VariationalState, pot: Potential) -> float:
    """``|int (grad psi)^2 - (2m/hbar^2) int (E - V) psi^2|``, zero at eigenpairs."""
    return abs(2.0 * functional_J(state.psi, pot, state.E))


def tise_residual(state: VariationalState, pot: Potential) -> float:
    """``||(-hbar^2/2m lap + V - E) psi||_2`` over interior nodes."""
    psi = state.psi
    g = psi.grid
    p = np.asarray(psi.values, dtype=float)
    r = -pot.hbar**2 / (2 * pot.m) * laplacian(ScalarField(g, p)).values + (pot.sample(g) - state.E) * p
    mask = g.interior_mask()
    return float(np.sqrt(np.sum((r * r)[mask]) * _cell_volume(g)))


# --------------------------------------------------------- discrete operator

def hamiltonian(pot: Potential, grid: Grid):
    """``H = -hbar^2/2m lap_h + V`` on interior unknowns, with the interior mask."""
    mask = grid.interior_mask()
    n_int = [c - 2 for c in grid.counts]
    A = None
    for a in range(grid.dim):
        n = n_int[a]
        D = sps.diags([np.ones(n - 1), np.full(n, -2.0), np.ones(n - 1)], [-1, 0, 1]) / grid.spacing[a] ** 2
        mats = [sps.identity(k) for k in n_int]
        mats[a] = D
        term = mats[0]
        for mm in mats[1:]:
            term = sps.kron(term, mm)
        A = term if A is None else A + term
    V = pot.sample(grid)[mask]
    H = (-pot.hbar**2 / (2 * pot.m)) * A + sps.diags(V)
    return sps.csr_matrix(H), mask


def discrete_ground_energy(pot: Potential, grid: Grid) -> float:
    """Smallest eigenvalue of the assembled Hamiltonian (independent solver path)."""
    from .chladni_modes import eigensolve
    H, mask = hamiltonian(pot, grid)
    M = np.full(H.shape[0], _cell_volume(grid))
    lam, _ = eigensolve(H * _cell_volume(grid), M, 1)
    return float(lam[0])


def minimize(pot: Potential, psi0: ScalarField, tol: float = 1e-6, max_iter: int = 100000,
             metric: str = "sobolev", armijo: float = 1e-4, shrink: float = 0.5) -> VariationalState:
    """Ground state by projected gradient descent on the Rayleigh quotient.

    ``E[psi] = (psi, H psi) / (psi, psi)``; the gradient on the unit sphere
    is ``r = (H - E) psi``.  With ``metric='sobolev'`` the descent direction is
    ``-P^-1 r`` for the energy-weighted metric ``P = H - min V + 1`` (an
    H^1 inner product); ``metric='l2'`` uses ``-r``.  Each trial point is
    renormalised; the step halves until the Armijo condition holds, so the
    logged energies never increase.  Stops when the TISE residual is below
    ``tol``.
    """
    g = psi0.grid
    if g.dim != pot.dim:
        raise ValueError("wavefunction grid and potential box differ in dimension")
    if metric not in ("sobolev", "l2"):
        raise ValueError("metric must be 'sobolev' or 'l2'")
    H, mask = hamiltonian(pot, g)
    vol = _cell_volume(g)
    x = np.asarray(np.real(psi0.values), dtype=float)[mask].copy()
    if not np.any(x):
        raise ValueError("initial wavefunction is zero")

    def normalize(u):
        return u / np.sqrt(np.sum(u * u) * vol)

    def rq(u):
        return float(u @ (H @ u)) / float(u @ u)

    def residual(u, e):
        r = H @ u - e * u
        return r, float(np.sqrt(np.sum(r * r) * vol))

    if metric == "sobolev":
        vmin = float(pot.sample(g)[mask].min())
        lu = spla.splu(sps.csc_matrix(H + sps.identity(H.shape[0]) * (1.0 - vmin)))
        precond = lu.solve
    else:
        # step scale of the spectrum so that alpha ~ 1 is a sensible first try
        lmax = float(abs(H).sum(axis=1).max())
        precond = lambda r: r / lmax  # noqa: E731

    x = normalize(x)
    E = rq(x)
    r, res = residual(x, E)
    state = VariationalState(ScalarField(g, _embed(x, mask, g)), E, [E], [res], 0, False)
    it = 0
    while res >= tol:
        if it >= max_iter:
            state.psi, state.E, state.iterations = ScalarField(g, _embed(x, mask, g)), E, it
            raise MinimizationError(f"no convergence in {max_iter} iterations (residual {res:.3e})", state)
        d = -precond(r)
        slope = float(r @ d) * vol * 2.0     # dE/dalpha at alpha = 0
        if slope >= 0:
            d, slope = -r, -2.0 * float(r @ r) * vol
        alpha = 1.0
        while True:
            y = normalize(x + alpha * d)
            Ey = rq(y)
            if Ey <= E + armijo * alpha * slope or alpha < 1e-14:
                break
            alpha *= shrink
        if Ey > E:
            # no further decrease at rounding level
            break
        x, E = y, Ey
        r, res = residual(x, E)
        it += 1
        state.log.append(E)
        state.residuals.append(res)
    state.psi = ScalarField(g, _embed(x, mask, g))
    state.E = E
    state.iterations = it
    state.converged = res < tol
    if not state.converged:
        raise MinimizationError(f"descent stalled at residual {res:.3e}", state)
    return state


def _embed(x, mask, g):
    full = np.zeros(g.shape)
    full[mask] = x
    return full


def sine_guess(grid: Grid) -> ScalarField:
    """Positive bump vanishing on the walls, a generic starting point."""
    xs = grid.mesh()
    out = np.ones(grid.shape)
    for a, x in enumerate(xs):
        lo = grid.origin[a]
        L = grid.length(a)
        t = (x - lo) / L
        out = out * t * (1 - t) * (1 + 0.3 * np.cos(3 * np.pi * t))
    return ScalarField(grid, out)
