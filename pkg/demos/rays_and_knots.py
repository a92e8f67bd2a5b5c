"""
Rays, force-free fields and knotted field lines
===============================================

A point source spreads its ray tube like tau^2; a torus field with rational
winding closes into a torus knot, an irrational one never does; two
interlocked circles link once.
"""
from fractions import Fraction

import numpy as np

from opticqm.ck_knots import (ck_build_cylinder, force_free_residual, hopf_pair, linking_number,
                              nodal_intersection, radial_scalar, torus_field, torus_winding,
                              trace_field_line)
from opticqm.eikonal_rays import MediumIndex, point_source_launch, ray_jacobian, transport_amplitude
from opticqm.grid import Grid

# rays in a uniform medium: J = tau^2 and the amplitude falls like 1/tau
med = MediumIndex.constant(1.0)
d = np.array([1.0, 0.0, 1.0]) / np.sqrt(2)
path = ray_jacobian(d, point_source_launch(np.zeros(3), med), med, (1.0, 10.0), 0.01)
path, by_div, by_jac = transport_amplitude(path)
for i in range(0, len(path.tau), 180):
    print(f"tau {path.tau[i]:5.2f}  J/tau^2 {path.J[i] / path.tau[i] ** 2:.6f}  amp*tau {by_jac[i] * path.tau[i]:.6f}")

# Chandrasekhar-Kendall cylinder mode: curl F = k F, and its two nodal surfaces meet on the axis
g = Grid.box([-1] * 3, [1] * 3, [33] * 3)
f = ck_build_cylinder(g, 2.0, 1, 0.0)
rep = nodal_intersection(radial_scalar(f))
print(f"force-free residual {force_free_residual(f):.2e}; {len(rep.curves)} nodal centerline(s)")

# torus field lines
g = Grid.box([-1.6, -1.6, -0.8], [1.6, 1.6, 0.8], [65, 65, 33])
for slope in (Fraction(3, 2), Fraction(1, 1), 1 / np.sqrt(2)):
    c = trace_field_line(torus_field(g, float(slope)), [1.4, 0, 0], 40.0)
    tag = f"(p, q) = {torus_winding(c)}" if c.closed else "open"
    print(f"slope {str(slope):>18}: length {c.arc_length:6.2f}, {tag}")

c1, c2 = hopf_pair(512)
print("Hopf pair linking number", linking_number(c1, c2).raw)
print("with one circle reversed", linking_number(c1, c2.reversed()).raw)
