"""Huygens-equivalence transformations of constant-coefficient wave operators.

A :class:`WaveOperator` is

    a2t d_t^2 + a1t d_t + alap lap + sum_i a1x[i] d_i + a0

with exact (sympy) coefficients.  Three operations preserve Huygens'
property: constant affine changes of variables, gauge conjugation
``L -> lam^-1 L[lam .]`` and multiplication by a positive function.
Conjugation by ``lam = exp(alpha t + i beta.x)`` shifts ``d_t -> d_t + alpha``
and ``d_i -> d_i + i beta_i``; expanding the product rule gives the new
coefficients exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .grid import Grid, diff, diff2

I = sp.I


def _s(v):
    return sp.nsimplify(v) if isinstance(v, float) else sp.sympify(v)


@dataclass(frozen=True)
class WaveOperator:
    a2t: sp.Expr
    a1t: sp.Expr
    alap: sp.Expr
    a1x: tuple
    a0: sp.Expr
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a2t", sp.simplify(_s(self.a2t)))
        object.__setattr__(self, "a1t", sp.simplify(_s(self.a1t)))
        object.__setattr__(self, "alap", sp.simplify(_s(self.alap)))
        a1x = tuple(self.a1x) if np.ndim(self.a1x) else (self.a1x, 0, 0)
        object.__setattr__(self, "a1x", tuple(sp.simplify(_s(v)) for v in a1x))
        object.__setattr__(self, "a0", sp.simplify(_s(self.a0)))
        if self.a2t == 0:
            raise ValueError("the d_t^2 coefficient must be non-zero")

    @property
    def coefficients(self) -> tuple:
        """``(a2t, a1t, alap, (a1x, a1y, a1z), a0)``."""
        return (self.a2t, self.a1t, self.alap, self.a1x, self.a0)

    def subs(self, *args, **kwargs) -> "WaveOperator":
        def f(e):
            return sp.simplify(e.subs(*args, **kwargs))
        return WaveOperator(f(self.a2t), f(self.a1t), f(self.alap),
                            tuple(f(v) for v in self.a1x), f(self.a0), self.name)

    def equals(self, other: "WaveOperator") -> bool:
        pairs = [(self.a2t, other.a2t), (self.a1t, other.a1t), (self.alap, other.alap),
                 (self.a0, other.a0)] + list(zip(self.a1x, other.a1x))
        return all(sp.simplify(p - q) == 0 for p, q in pairs)

    def numeric(self) -> tuple:
        """Coefficients as Python complex numbers (all symbols must be bound)."""
        def c(e):
            if e.free_symbols:
                raise ValueError(f"unbound symbols {e.free_symbols} in {self.name or 'operator'}")
            return complex(sp.N(e))
        return c(self.a2t), c(self.a1t), c(self.alap), tuple(c(v) for v in self.a1x), c(self.a0)

    def table(self) -> dict:
        """Printable coefficient table (strings)."""
        return {"d_t^2": str(self.a2t), "d_t": str(self.a1t), "laplacian": str(self.alap),
                "d_x": str(self.a1x[0]), "d_y": str(self.a1x[1]), "d_z": str(self.a1x[2]),
                "1": str(self.a0)}

    def apply(self, series: np.ndarray, dt: float, grid: Grid) -> np.ndarray:
        """Evaluate on samples ``series[t, *grid.shape]`` at interior time levels.

        Second-order centred differences in time; grid stencils in space.
        Returns an array of shape ``(nt - 2, *grid.shape)``.
        """
        a2t, a1t, alap, a1x, a0 = self.numeric()
        u = np.asarray(series)
        if u.shape[1:] != grid.shape or u.shape[0] < 3:
            raise ValueError("series must have shape (nt >= 3, *grid.shape)")
        mid = u[1:-1]
        out = a2t * (u[2:] - 2.0 * mid + u[:-2]) / dt**2 + a1t * (u[2:] - u[:-2]) / (2.0 * dt)
        out = out + a0 * mid
        for a in range(grid.dim):
            per, h = grid.is_periodic(a), grid.spacing[a]
            if alap != 0:
                out = out + alap * diff2(mid, a + 1, h, per)
            if a1x[a] != 0:
                out = out + a1x[a] * diff(mid, a + 1, h, per)
        return out


def dalembert(c=1) -> WaveOperator:
    """``d_t^2 / c^2 - lap``."""
    return WaveOperator(1 / _s(c) ** 2, 0, -1, (0, 0, 0), 0, "d'Alembert")


def telegrapher(a) -> WaveOperator:
    """``d_t^2 + 2a d_t - lap``."""
    return WaveOperator(1, 2 * _s(a), -1, (0, 0, 0), 0, "telegrapher")


def klein_gordon(m) -> WaveOperator:
    """``d_t^2 - lap + m^2``."""
    return WaveOperator(1, 0, -1, (0, 0, 0), _s(m) ** 2, "Klein-Gordon")


@dataclass(frozen=True)
class GaugeFactor:
    """One of the admissible transformations.

    kind ``"exp"``: ``lam = exp(alpha t + i beta.x)`` (covers the temporal
    and spatial exponentials; ``alpha`` and ``beta`` may be complex).
    kind ``"multiplier"``: ``L -> rho L`` with constant ``rho > 0``.
    kind ``"affine"``: ``t = time_scale t'``, ``x = space_scale x'``.
    """

    kind: str
    alpha: object = 0
    beta: tuple = (0, 0, 0)
    rho: object = 1
    time_scale: object = 1
    space_scale: object = 1

    KINDS = ("exp", "multiplier", "affine")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unsupported gauge kind {self.kind!r}; supported: {self.KINDS}")
        object.__setattr__(self, "alpha", _s(self.alpha))
        beta = tuple(self.beta) if np.ndim(self.beta) else (self.beta, 0, 0)
        object.__setattr__(self, "beta", tuple(_s(b) for b in beta))
        object.__setattr__(self, "rho", _s(self.rho))
        if self.kind == "multiplier" and self.rho.is_number and not sp.re(self.rho) > 0:
            raise ValueError("multiplier must be positive")
        if self.kind == "affine":
            object.__setattr__(self, "time_scale", _s(self.time_scale))
            object.__setattr__(self, "space_scale", _s(self.space_scale))
            if self.time_scale == 0 or self.space_scale == 0:
                raise ValueError("affine map must be non-singular")

    @classmethod
    def temporal(cls, alpha):
        return cls("exp", alpha=alpha)

    @classmethod
    def spatial(cls, beta):
        """``exp(i beta.x)``; a scalar ``beta`` acts along x."""
        return cls("exp", beta=beta)

    @classmethod
    def multiplier(cls, rho):
        return cls("multiplier", rho=rho)

    @classmethod
    def affine(cls, time_scale=1, space_scale=1):
        return cls("affine", time_scale=time_scale, space_scale=space_scale)

    @classmethod
    def identity(cls):
        return cls("exp")

    def inverse(self) -> "GaugeFactor":
        if self.kind == "exp":
            return GaugeFactor("exp", alpha=-self.alpha, beta=tuple(-b for b in self.beta))
        if self.kind == "multiplier":
            return GaugeFactor("multiplier", rho=1 / self.rho)
        return GaugeFactor("affine", time_scale=1 / self.time_scale,
                           space_scale=1 / self.space_scale)

    def compose(self, other: "GaugeFactor") -> "GaugeFactor":
        """The single factor equivalent to applying ``self`` then ``other``."""
        if self.kind != other.kind:
            raise ValueError("can only compose factors of the same kind")
        if self.kind == "exp":
            return GaugeFactor("exp", alpha=self.alpha + other.alpha,
                               beta=tuple(p + q for p, q in zip(self.beta, other.beta)))
        if self.kind == "multiplier":
            return GaugeFactor("multiplier", rho=self.rho * other.rho)
        return GaugeFactor("affine", time_scale=self.time_scale * other.time_scale,
                           space_scale=self.space_scale * other.space_scale)

    def values(self, times, grid: Grid) -> np.ndarray:
        """``lam`` (exp kind) or ``rho`` sampled on ``times x grid``."""
        if self.kind == "affine":
            raise ValueError("affine maps have no multiplicative factor")
        t = np.asarray(times, dtype=float).reshape((-1,) + (1,) * grid.dim)
        if self.kind == "multiplier":
            return np.full((t.shape[0],) + grid.shape, complex(sp.N(self.rho)))
        xs = grid.mesh3()
        alpha = complex(sp.N(self.alpha))
        beta = [complex(sp.N(b)) for b in self.beta]
        space = sum(beta[a] * xs[a] for a in range(3))
        return np.exp(alpha * t + 1j * space[None, ...])


def conjugate_operator(L: WaveOperator, g: GaugeFactor) -> WaveOperator:
    """Coefficients of the transformed operator.

    ``exp``: ``lam^-1 L[lam phi]``; ``multiplier``: ``rho L``; ``affine``:
    ``L`` written in the scaled variables.
    """
    a2t, a1t, alap, a1x, a0 = L.coefficients
    if g.kind == "exp":
        al, be = g.alpha, g.beta
        ib = [I * b for b in be]
        return WaveOperator(
            a2t,
            a1t + 2 * al * a2t,
            alap,
            tuple(a1x[i] + 2 * ib[i] * alap for i in range(3)),
            a0 + a2t * al**2 + a1t * al + alap * sum(v**2 for v in ib)
            + sum(a1x[i] * ib[i] for i in range(3)),
            L.name,
        )
    if g.kind == "multiplier":
        r = g.rho
        return WaveOperator(r * a2t, r * a1t, r * alap, tuple(r * v for v in a1x), r * a0, L.name)
    st, sx = g.time_scale, g.space_scale
    return WaveOperator(a2t / st**2, a1t / st, alap / sx**2, tuple(v / sx for v in a1x), a0,
                        L.name)


def continue_mass(L: WaveOperator, m: sp.Symbol) -> WaveOperator:
    """Analytic continuation ``m -> i m`` in every coefficient."""
    return L.subs(m, I * m)


@dataclass
class Chain:
    """Named stages of an operator transformation sequence."""

    stages: list = field(default_factory=list)

    def add(self, label: str, op: WaveOperator):
        self.stages.append((label, op))
        return op

    @property
    def result(self) -> WaveOperator:
        return self.stages[-1][1]

    def tables(self) -> list:
        return [{"stage": label, "coefficients": op.table()} for label, op in self.stages]


def gauge_chain_to_telegrapher(a=sp.Symbol("a"), b=None, c=None) -> Chain:
    """d'Alembert conjugated by ``exp(a t)``, then ``exp(i b x)``, then ``exp(-i c x)``.

    Defaults ``b = c = a/sqrt(2)``.  With ``b = c`` the two spatial factors
    multiply to one, so the last stage equals the first conjugate exactly:
    the constant term stays ``a^2``.
    """
    a = _s(a)
    b = a / sp.sqrt(2) if b is None else _s(b)
    c = b if c is None else _s(c)
    ch = Chain()
    L = ch.add("d'Alembert", dalembert())
    L = ch.add("exp(a t)", conjugate_operator(L, GaugeFactor.temporal(a)))
    L = ch.add("exp(i b x)", conjugate_operator(L, GaugeFactor.spatial(b)))
    ch.add("exp(-i c x)", conjugate_operator(L, GaugeFactor.spatial(-c)))
    return ch


def build_telegrapher(a=sp.Symbol("a")):
    """Telegrapher operator ``d_t^2 + 2a d_t - lap`` and the gauge chain toward it.

    Returns ``(operator, chain, gap)``.  ``gap`` is the chain's final
    operator minus the telegrapher, coefficient by coefficient; it is the
    zero-order term ``a^2`` because the spatial factors cancel each other.
    """
    ch = gauge_chain_to_telegrapher(a)
    target = telegrapher(a)
    last = ch.result
    gap = {k: sp.simplify(sp.sympify(p) - sp.sympify(q)) for k, p, q in
           zip(("a2t", "a1t", "alap", "a1x", "a0"),
               (last.a2t, last.a1t, last.alap, sum(last.a1x), last.a0),
               (target.a2t, target.a1t, target.alap, sum(target.a1x), target.a0))}
    return target, ch, gap


def telegrapher_to_kg(m=sp.Symbol("m", positive=True), general_a=None) -> Chain:
    """Telegrapher -> Klein-Gordon.

    Substitutes ``phi = exp(m t) psi`` (conjugation by ``exp(m t)``) with the
    damping linked as ``a = -m`` so the first-order time term cancels, then
    continues ``m -> i m``.  The result is ``d_t^2 - lap + m^2``.  Passing
    ``general_a`` keeps the damping free and skips nothing but the linkage.
    """
    ms = sp.Symbol("m", positive=True)
    a = -ms if general_a is None else _s(general_a)
    ch = Chain()
    L = ch.add("telegrapher", telegrapher(a))
    L = ch.add("exp(m t)", conjugate_operator(L, GaugeFactor.temporal(ms)))
    L = ch.add("m -> i m", continue_mass(L, ms))
    if not (isinstance(m, sp.Symbol) and m.name == "m"):
        for i, (label, op) in enumerate(ch.stages):
            ch.stages[i] = (label, op.subs(ms, _s(m)))
    return ch


# ------------------------------------------------------ numerical checks

def space_time_samples(fn, grid: Grid, times) -> np.ndarray:
    """``fn(t, x, y, z)`` sampled on ``times x grid``."""
    xs = grid.mesh3()
    return np.stack([np.broadcast_to(fn(t, *xs), grid.shape) for t in times]).astype(complex)


def random_trig_functions(count: int, grid: Grid, rng, modes: int = 3, kmax: int = 2):
    """Smooth space-time test functions periodic on ``grid``.

    Each is a sum of ``modes`` complex exponentials with integer wave
    numbers per periodic axis and random frequencies and amplitudes.
    """
    lengths = [grid.length(a) for a in range(grid.dim)]
    fns = []
    for _ in range(count):
        terms = []
        for _ in range(modes):
            kv = np.zeros(3)
            for a in range(grid.dim):
                kv[a] = 2 * np.pi * rng.integers(-kmax, kmax + 1) / lengths[a]
            w = rng.uniform(-2.0, 2.0)
            amp = rng.normal() + 1j * rng.normal()
            terms.append((kv, w, amp))

        def fn(t, x, y, z, terms=terms):
            return sum(amp * np.exp(1j * (kv[0] * x + kv[1] * y + kv[2] * z + w * t))
                       for kv, w, amp in terms)

        fns.append(fn)
    return fns


def equivalence_residual(L: WaveOperator, Lt: WaveOperator, g: GaugeFactor, tests,
                         grid: Grid, times) -> float:
    """``max |Lt[phi] - lam^-1 L[lam phi]|`` over test functions and interior samples.

    ``tests`` are callables ``fn(t, x, y, z)`` or pre-sampled arrays.  For a
    multiplier factor the comparison is ``Lt[phi] - rho L[phi]``.
    """
    times = np.asarray(times, dtype=float)
    dt = float(times[1] - times[0])
    interior = grid.interior_mask()
    worst = 0.0
    for fn in tests:
        phi = fn if isinstance(fn, np.ndarray) else space_time_samples(fn, grid, times)
        lhs = Lt.apply(phi, dt, grid)
        if g.kind == "exp":
            lam = g.values(times, grid)
            rhs = L.apply(lam * phi, dt, grid) / lam[1:-1]
        elif g.kind == "multiplier":
            rhs = complex(sp.N(g.rho)) * L.apply(phi, dt, grid)
        else:
            raise ValueError("affine maps are checked symbolically only")
        worst = max(worst, float(np.abs(lhs - rhs)[:, interior].max()))
    return worst


def operator_residual(L: WaveOperator, fn, grid: Grid, times) -> float:
    """``max |L[phi]|`` over interior samples, for checking solution families."""
    times = np.asarray(times, dtype=float)
    phi = space_time_samples(fn, grid, times)
    r = L.apply(phi, float(times[1] - times[0]), grid)
    return float(np.abs(r)[:, grid.interior_mask()].max())
