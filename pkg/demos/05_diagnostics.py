"""Energy decay, pressure recovery, momentum residual and countable norms
on a random divergence-free flow.

Run: python demos/05_diagnostics.py
"""

import numpy as np

from mildns import (
    SolverConfig,
    build_grid,
    countable_norm,
    evolve,
    forward_transform,
    inverse_transform,
    momentum_residual,
    preset_field,
)
from mildns.diagnostics import c2_norm

grid = build_grid(16)
u0 = preset_field("random_solenoidal", {"amplitude": 1.0}, grid, seed=7)
print("countable norms of the initial field:")
for p in range(4):
    print(f"  p={p}: {countable_norm(u0, p, grid).value:.4e}")
U0 = forward_transform(u0, grid)
print(f"C2 norm {c2_norm(U0.components, grid):.3f}")

for dt in (2e-2, 1e-2):
    cfg = SolverConfig(nu=0.05, dt=dt, t_final=0.4)
    tr = evolve(U0, None, cfg, grid)
    L = np.array([e.l2_norm for e in tr.energy])
    _, res = momentum_residual(tr, None, cfg, grid)
    print(
        f"dt={dt:g}: L2 {L[0]:.4f} -> {L[-1]:.4f}, monotone={bool(np.all(np.diff(L) <= 0))}, "
        f"max momentum residual {res.max():.3e}"
    )

final = inverse_transform(tr.final, grid)
print(f"divergence of the final state: {tr.energy[-1].divergence_max:.1e}")
print(f"p=2 countable norm at T: {countable_norm(final, 2, grid).value:.4e}")
