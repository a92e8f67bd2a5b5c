"""
Chladni figures on a square plate
=================================

Solve the clamped membrane, then draw nodal lines of single modes and of
combinations inside the 5*pi^2 degenerate pair.  Figures go to ``demo_out/``.
"""
import sys
from pathlib import Path

import numpy as np

from opticqm.chladni_modes import (MembraneProblem, assemble, nodal_set, nodal_stats,
                                   separable_align, solve_modes, superpose)
from opticqm.svg import domain_outline, emit_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

# assemble the 5-point operator at h = 1/64 and take the lowest eight modes
op = assemble(MembraneProblem("square", "dirichlet", 1 / 64))
modes = separable_align(solve_modes(op, 8), op)
for md in modes:
    print(f"lambda = {md.eigenvalue:9.4f}  ({md.eigenvalue / np.pi**2:.4f} pi^2)  cluster {md.cluster_id}")

# inside the degenerate pair every mix is again a mode; the nodal line rotates with the mix
for deg in (0, 30, 45, 60, 90):
    t = np.radians(deg)
    w = superpose([modes[1], modes[2]], [np.cos(t), np.sin(t)], op)
    ns = nodal_set(w, op.mask)
    count, closed, length = nodal_stats(ns)
    print(f"mix {deg:2d} deg: {count} line(s), {closed} closed, length {length:.3f}")
    emit_svg(out / f"pair_{deg:02d}.svg", ns.polylines, ns.closed, domain_outline("square"))

# a higher combination gives the classic closed figure
w = superpose([modes[4], modes[5]], [1.0, -1.0], op)
ns = nodal_set(w, op.mask)
emit_svg(out / "mode_mix_high.svg", ns.polylines, ns.closed, domain_outline("square"))
print("figures written to", out)
