"""Initial-velocity presets."""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from .grid import PhysicalField3, WavenumberGrid, fft3, ifft3_real
from .operators import ProjectionTensor

__all__ = ["PRESETS", "preset_field", "taylor_green_exact"]

PRESETS = ("taylor_green", "random_solenoidal", "single_mode", "from_checkpoint")


def _base_wavenumber(grid: WavenumberGrid) -> float:
    return 2 * np.pi / grid.domain_length


def taylor_green_exact(grid: WavenumberGrid, t: float, nu: float, amplitude: float = 1.0) -> np.ndarray:
    """Decaying Taylor-Green vortex, an exact Navier-Stokes solution, shape (3, n, n, n)."""
    k = _base_wavenumber(grid)
    x1, x2, x3 = grid.coordinates()
    decay = amplitude * np.exp(-2 * nu * k**2 * t)
    u = np.zeros((3,) + grid.shape)
    u[0] = decay * np.sin(k * x1) * np.cos(k * x2) + 0 * x3
    u[1] = -decay * np.cos(k * x1) * np.sin(k * x2) + 0 * x3
    return u


def _single_mode(grid: WavenumberGrid, gamma, amplitude) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    e = np.asarray(amplitude, dtype=complex)
    if gamma.shape != (3,) or e.shape != (3,):
        raise ValueError("single_mode needs 3-component 'gamma' and 'amplitude'")
    if np.any(gamma != np.round(gamma)) or np.any(np.abs(gamma) >= grid.n // 2):
        raise ValueError(f"single_mode gamma must be integers inside the lattice, got {gamma}")
    if abs(gamma @ e) > 1e-12 * max(np.linalg.norm(gamma) * np.linalg.norm(e), 1e-300):
        raise ValueError("single_mode amplitude must be orthogonal to gamma")
    k = _base_wavenumber(grid)
    x1, x2, x3 = grid.coordinates()
    phase = np.exp(1j * k * (gamma[0] * x1 + gamma[1] * x2 + gamma[2] * x3))
    return np.stack([np.real(e[i] * phase) for i in range(3)])


def _random_solenoidal(grid: WavenumberGrid, seed: int, energy: float, k_max: float) -> np.ndarray:
    if not 0 < k_max <= grid.n // 3:
        raise ValueError(f"k_max must lie in (0, {grid.n // 3}] to stay inside the dealiasing mask")
    if energy < 0:
        raise ValueError("energy must be >= 0")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + grid.shape)
    spec = fft3(noise)
    idx = grid.index
    radius_sq = idx[:, None, None] ** 2 + idx[None, :, None] ** 2 + idx[None, None, :] ** 2
    band = (radius_sq <= k_max**2) & (radius_sq > 0)
    spec = ProjectionTensor.from_grid(grid).apply(spec * band)
    u = ifft3_real(spec)
    current = 0.5 * np.sum(u**2) * grid.cell_volume
    if current == 0:
        return u
    return u * np.sqrt(energy / current)


def preset_field(
    name: str,
    params: Mapping[str, Any] | None,
    grid: WavenumberGrid,
    seed: int = 0,
) -> PhysicalField3:
    """Divergence-free initial velocity.

    ``taylor_green``: (sin x1 cos x2, -cos x1 sin x2, 0) * amplitude.
    ``random_solenoidal``: projected Gaussian noise restricted to integer
    radius <= k_max, scaled to kinetic ``energy`` (default amplitude^2 L^3 / 4,
    the Taylor-Green energy at the same amplitude).
    ``single_mode``: Re(amplitude * exp(i gamma.x)).
    ``from_checkpoint``: velocity and time read from ``path``.
    """
    params = dict(params or {})
    if name == "taylor_green":
        A = float(params.pop("amplitude", 1.0))
        u = taylor_green_exact(grid, 0.0, 0.0, A)
        time = 0.0
    elif name == "random_solenoidal":
        A = float(params.pop("amplitude", 1.0))
        energy = float(params.pop("energy", A**2 * grid.domain_length**3 / 4))
        k_max = float(params.pop("k_max", min(4, grid.n // 3)))
        u = _random_solenoidal(grid, seed, energy, k_max)
        time = 0.0
    elif name == "single_mode":
        gamma = params.pop("gamma", (0, 1, 0))
        amplitude = params.pop("amplitude", (1.0, 0.0, 0.0))
        if np.isscalar(amplitude):
            raise ValueError("single_mode amplitude must be a 3-vector")
        u = _single_mode(grid, gamma, amplitude)
        time = 0.0
    elif name == "from_checkpoint":
        from .checkpoint import load_checkpoint

        if "path" not in params:
            raise ValueError("from_checkpoint needs a 'path' parameter")
        ck = load_checkpoint(params.pop("path"))
        if ck.n != grid.n or not np.isclose(ck.domain_length, grid.domain_length):
            raise ValueError(
                f"checkpoint grid (n={ck.n}, L={ck.domain_length}) does not match "
                f"(n={grid.n}, L={grid.domain_length})"
            )
        u, time = ck.velocity, ck.t
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if params:
        raise ValueError(f"unused parameters for preset {name!r}: {sorted(params)}")
    return PhysicalField3(u, time)
