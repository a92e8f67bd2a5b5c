"""
Gauge chains and variational ground states
==========================================

Conjugating the wave operator by exponential factors gives the telegrapher
and Klein-Gordon operators; the exact algebra is printed stage by stage.  Then
the Rayleigh quotient is driven down to the ground state of a box and of an
oscillator.
"""
import sympy as sp

from opticqm.huygens_equiv import build_telegrapher, telegrapher_to_kg
from opticqm.schrodinger_var import Potential, functional_J, minimize, sine_guess

a = sp.Symbol("a")
target, chain, gap = build_telegrapher(a)
for label, op in chain.stages:
    print(f"{label:12s} {op.table()}")
print("left over against the telegrapher:", gap)
for label, op in telegrapher_to_kg().stages:
    print(f"{label:12s} {op.table()}")

for pot, h, exact in ((Potential.box(), 1 / 256, float(sp.pi**2 / 2)),
                      (Potential.harmonic(1.0, 8.0), 1 / 32, 0.5)):
    s = minimize(pot, sine_guess(pot.grid(h)))
    print(f"{pot.name:9s} E = {s.E:.6f} (exact {exact:.6f}) after {s.iterations} steps, "
          f"J = {functional_J(s.psi, pot, s.E):.1e}")
