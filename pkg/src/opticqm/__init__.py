"""Numerical checks of the optics and quantum-mechanics correspondence.

Submodules: ``grid`` (uniform grids, stencils, quadrature), ``maxwell_rs``
(photon wavefunction), ``scalar_field`` (Klein-Gordon observables),
``eikonal_rays`` (geometric optics), ``huygens_equiv`` (operator gauge
chains), ``chladni_modes`` (membrane modes and nodal sets), ``ck_knots``
(Beltrami fields, knots and links), ``schrodinger_var`` (variational
ground states), ``fieldio``, ``svg`` and ``cli``.
"""
from .grid import Grid, ScalarField, VectorField3

__all__ = ["Grid", "ScalarField", "VectorField3"]
__version__ = "0.1.0"
