"""Leray projector, heat propagator and the Duhamel quadrature.

Run: python demos/02_operators.py
"""

import numpy as np

from mildns import (
    PhysicalField3,
    ProjectionTensor,
    SpectralField3,
    build_grid,
    duhamel_integral,
    forward_transform,
    heat_propagator,
)
from mildns.diagnostics import divergence_ratio

grid = build_grid(16)
rng = np.random.default_rng(0)
T = ProjectionTensor.from_grid(grid)

print("P at gamma = (1, 0, 0):")
print(T.matrix_at(1, 0, 0) + 0.0)

U = forward_transform(PhysicalField3(rng.standard_normal((3,) + grid.shape)), grid).components
PU = T.apply(U)
print(f"divergence ratio before {divergence_ratio(U, grid):.3f}, after {divergence_ratio(PU, grid):.1e}")
print(f"idempotence |P P U - P U|: {np.max(np.abs(T.apply(PU) - PU)):.1e}")

# heat flow: every mode decays by exp(-nu |gamma|^2 t)
V = np.zeros((3,) + grid.shape, complex)
V[0, 0, 1, 0] = 1.0
decayed = heat_propagator(SpectralField3(V), 0.1, 1.0, grid).components[0, 0, 1, 0].real
print(f"single mode, nu=0.1, t=1: {decayed:.6f} (exp(-0.1) = {np.exp(-0.1):.6f})")

a = heat_propagator(heat_propagator(SpectralField3(U), 0.2, 0.3, grid), 0.2, 0.4, grid).components
b = heat_propagator(SpectralField3(U), 0.2, 0.7, grid).components
print(f"semigroup gap: {np.max(np.abs(a - b)) / np.max(np.abs(b)):.1e}")

# Duhamel integral of constant forcing on one mode against the closed form
nu, c, span = 0.5, 1.0, 1.0
lam = nu * 1.0
exact = c * (1 - np.exp(-lam * span)) / lam
print("\nDuhamel trapezoid error vs closed form:")
print(f"{'intervals':>10} {'error':>12} {'ratio':>8}")
prev = None
for m in (2, 4, 8, 16, 32):
    taus = np.linspace(0, span, m + 1)
    samples = [(t, SpectralField3(V * c, t)) for t in taus]
    val = duhamel_integral(samples, nu, 0.0, span, grid).components[0, 0, 1, 0].real
    err = abs(val - exact)
    print(f"{m:>10} {err:>12.3e} {'' if prev is None else f'{prev / err:8.2f}'}")
    prev = err
