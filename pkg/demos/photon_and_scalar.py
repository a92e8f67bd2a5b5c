"""
Photon wavefunction and Klein-Gordon conservation laws
======================================================

Evolve a circularly polarised plane wave in its complex-vector form and watch
the energy, the divergence and the phase; then check the scalar continuity
equation under grid refinement.
"""
import numpy as np

from opticqm.grid import PERIODIC, Grid, ScalarField, divergence
from opticqm.maxwell_rs import circular_plane_wave, evolve_series, total_energy
from opticqm.scalar_field import ScalarState, continuity_residual_scalar, plane_wave_state

# photon: 32^3 periodic box, one wavelength along z, fourth-order curl
g = Grid.box([0, 0, 0], [1, 1, 1], [32, 32, 32], PERIODIC)
f0 = circular_plane_wave(g, 1, helicity=1)
dt = 0.25 * g.h
states = evolve_series(f0, dt, 40, order=4, every=10)
e0 = total_energy(f0)
for i, s in enumerate(states):
    t = 10 * i * dt
    exact = circular_plane_wave(g, 1, helicity=1, t=t)
    phase = np.angle(np.sum(np.conj(exact.F.values) * s.F.values))
    div = np.abs(divergence(s.F, 4).values).max()
    print(f"t={t:.4f}  energy drift {abs(total_energy(s) / e0 - 1):.1e}  max|div| {div:.1e}  phase {phase:+.1e}")


# scalar: two plane waves, sampled at five times; the continuity residual falls like h^2
def residual(n):
    g = Grid.box([0, 0, 0], [1, 1, 1], [n, n, 3], PERIODIC)
    dt = g.h / 4
    series = []
    for i in range(5):
        a = plane_wave_state(g, (2 * np.pi, 0, 0), 2 * np.pi, i * dt)
        b = plane_wave_state(g, (2 * np.pi, 2 * np.pi, 0), 2 * np.pi * np.sqrt(2), i * dt, 0.5)
        series.append(ScalarState(ScalarField(g, a.V.values + b.V.values),
                                  ScalarField(g, a.Vdot.values + b.Vdot.values)))
    return continuity_residual_scalar(series, dt)


r = [residual(n) for n in (16, 32, 64)]
print("scalar continuity residuals", ["%.2e" % v for v in r])
print("observed orders", [round(float(np.log2(r[i] / r[i + 1])), 3) for i in range(2)])
