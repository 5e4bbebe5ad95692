"""Transforms and spectral derivatives on the periodic box.

Run: python demos/01_spectral_grid.py
"""

import numpy as np

from mildns import PhysicalField3, build_grid, forward_transform, inverse_transform, spectral_derivative
from mildns.grid import hermitian_asymmetry

grid = build_grid(16)
x1, x2, x3 = grid.coordinates()
print(f"grid n={grid.n}, L={grid.domain_length:.4f}, dealias keeps |index| <= {grid.n // 3}")

# A band-limited velocity field with three different modes
u = np.zeros((3,) + grid.shape)
u[0] = np.sin(x1) * np.cos(2 * x2)
u[1] = np.cos(3 * x3)
u[2] = np.sin(x1 + x2 + x3)
U = forward_transform(PhysicalField3(u), grid)

print(f"Hermitian asymmetry of the spectrum: {hermitian_asymmetry(U.components):.1e}")
back = inverse_transform(U, grid).components
print(f"round trip max error: {np.max(np.abs(back - u)):.1e}")

# Parseval under the unnormalized forward transform
phys = np.sum(u**2) * grid.cell_volume
spec = np.sum(np.abs(U.components) ** 2) * grid.domain_length**3 / grid.n**6
print(f"Parseval: physical {phys:.12f}  spectral {spec:.12f}")

# d/dx2 of u1 against the analytic derivative
d2 = inverse_transform(spectral_derivative(U, 2, grid), grid).components[0]
exact = -2 * np.sin(x1) * np.sin(2 * x2)
print(f"d u1 / d x2 max error: {np.max(np.abs(d2 - exact)):.1e}")

# applying the derivative twice multiplies by -gamma^2
dd = inverse_transform(spectral_derivative(spectral_derivative(U, 3, grid), 3, grid), grid).components[1]
print(f"d^2 u2 / d x3^2 + 9 u2 max: {np.max(np.abs(dd + 9 * u[1])):.1e}")
