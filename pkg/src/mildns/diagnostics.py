"""Pressure recovery, energy accounting and the countable sup-norms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import (
    PhysicalField3,
    ScalarSpectralField,
    SpectralField3,
    WavenumberGrid,
    _check_shape,
    fft3,
    ifft3_real,
)
from .nonlinear import convective_spectrum, resolve_force

if TYPE_CHECKING:
    from .picard import SolverConfig, Trajectory

__all__ = [
    "EnergyRecord",
    "CountableNormReport",
    "pressure_spectrum",
    "pressure_gradient",
    "momentum_residual",
    "momentum_residual_at",
    "energy_record",
    "countable_norm",
    "c2_norm",
    "l2_norm",
    "divergence_ratio",
]

MAX_NORM_ORDER = 4


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    kinetic_energy: float
    l2_norm: float
    max_velocity: float
    divergence_max: float


@dataclass(frozen=True)
class CountableNormReport:
    p: int
    value: float


def _spectral_energy_sum(u_hat: np.ndarray, grid: WavenumberGrid) -> float:
    # Parseval under the unnormalized forward DFT
    flat = u_hat.ravel()
    return float(np.vdot(flat, flat).real) * grid.domain_length**3 / grid.n**6


def l2_norm(u_hat: np.ndarray, grid: WavenumberGrid) -> float:
    """Discrete L2 norm sqrt(int |u|^2 dx) from the spectrum."""
    return float(np.sqrt(_spectral_energy_sum(u_hat, grid)))


def divergence_ratio(u_hat: np.ndarray, grid: WavenumberGrid) -> float:
    """max |gamma.U| / max |gamma||U|; zero for a field without non-mean modes."""
    g1, g2, g3 = grid.derivative_gamma
    div = np.abs(g1 * u_hat[0] + g2 * u_hat[1] + g3 * u_hat[2])
    scale = np.max(np.sqrt(g1**2 + g2**2 + g3**2) * np.sqrt(np.sum(np.abs(u_hat) ** 2, axis=0)))
    return 0.0 if scale == 0 else float(np.max(div) / scale)


def energy_record(u: SpectralField3, t: float, grid: WavenumberGrid) -> EnergyRecord:
    _check_shape(u.components, grid)
    U = u.components
    e2 = _spectral_energy_sum(U, grid)
    phys = ifft3_real(U)
    speed = np.sqrt(np.sum(phys**2, axis=0))
    div_hat = sum(U[s] * grid.derivative_symbol(s) for s in range(3))
    div = ifft3_real(div_hat)
    return EnergyRecord(
        t=float(t),
        kinetic_energy=0.5 * e2,
        l2_norm=float(np.sqrt(e2)),
        max_velocity=float(np.max(speed)),
        divergence_max=float(np.max(np.abs(div))),
    )


def pressure_spectrum(f_tilde_hat: SpectralField3, grid: WavenumberGrid) -> ScalarSpectralField:
    """Pressure from the divergence of the momentum balance.

    With div u = 0 the momentum equation gives lap p = div f_tilde, i.e.
    ``P = -(i gamma . F) / |gamma|^2``; the mean mode is pinned to zero.
    """
    _check_shape(f_tilde_hat.components, grid)
    F = f_tilde_hat.components
    div = sum(F[s] * grid.derivative_symbol(s) for s in range(3))
    g1, g2, g3 = grid.derivative_gamma
    # lap p as the composition of the first-derivative symbols, so grad p is an exact discrete gradient
    gsq = g1**2 + g2**2 + g3**2
    zero = gsq == 0
    P = np.where(zero, 0.0, -div / np.where(zero, 1.0, gsq))
    return ScalarSpectralField(P, f_tilde_hat.time)


def pressure_gradient(p: ScalarSpectralField, grid: WavenumberGrid) -> SpectralField3:
    return SpectralField3(
        np.stack([p.values * grid.derivative_symbol(s) for s in range(3)]), p.time
    )


def _time_derivative(t_prev, t, t_next, u_prev, u, u_next):
    h1, h2 = t - t_prev, t_next - t
    return (
        -h2 / (h1 * (h1 + h2)) * u_prev
        + (h2 - h1) / (h1 * h2) * u
        + h1 / (h2 * (h1 + h2)) * u_next
    )


def momentum_residual_at(
    snapshots: tuple[SpectralField3, SpectralField3, SpectralField3],
    f,
    config: "SolverConfig",
    grid: WavenumberGrid,
) -> float:
    """Max-norm of du/dt + (u.grad)u - nu lap u + grad p - f at the middle snapshot.

    du/dt uses the three-point second-order difference.
    """
    prev, mid, nxt = snapshots
    U = mid.components
    dudt = _time_derivative(
        prev.time, mid.time, nxt.time, prev.components, U, nxt.components
    )
    dealiased = getattr(config, "dealias", True)
    if getattr(config, "nonlinear", True):
        conv = convective_spectrum(U, grid, dealiased)
    else:
        conv = np.zeros_like(U)
    force = resolve_force(f, mid.time)
    f_hat = np.zeros_like(U) if force.is_zero else fft3(force.f.components)
    f_tilde = SpectralField3(f_hat - conv, mid.time)
    grad_p = pressure_gradient(pressure_spectrum(f_tilde, grid), grid).components
    lap = -grid.gamma_sq * U
    residual_hat = dudt + conv - config.nu * lap + grad_p - f_hat
    return float(np.max(np.abs(ifft3_real(residual_hat))))


def momentum_residual(
    trajectory: "Trajectory",
    f,
    config: "SolverConfig",
    grid: WavenumberGrid,
    spacing_rtol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Momentum-equation residual along a trajectory.

    Evaluated at each interior snapshot whose two neighbours are equally
    spaced around it.  Returns ``(times, residuals)``.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 3:
        raise ValueError("momentum residual needs at least 3 snapshots")
    times, values = [], []
    for a, b, c in zip(snaps, snaps[1:], snaps[2:]):
        h1, h2 = b.time - a.time, c.time - b.time
        if abs(h1 - h2) > spacing_rtol * max(h1, h2):
            continue
        times.append(b.time)
        values.append(momentum_residual_at((a, b, c), f, config, grid))
    return np.asarray(times), np.asarray(values)


def _multi_indices(p: int):
    return [q for q in itertools.product(range(p + 1), repeat=3) if sum(q) <= p]


def _derivative_sup(U: np.ndarray, grid: WavenumberGrid, p: int) -> np.ndarray:
    """Pointwise max over |q| <= p of |D^q u_i|, per component, shape (3, n, n, n)."""
    syms = [grid.derivative_symbol(s) for s in range(3)]
    best = np.zeros((3,) + grid.shape)
    for q in _multi_indices(p):
        sym = syms[0] ** q[0] * syms[1] ** q[1] * syms[2] ** q[2]
        np.maximum(best, np.abs(ifft3_real(U * sym)), out=best)
    return best


def countable_norm(u: PhysicalField3, p: int, grid: WavenumberGrid) -> CountableNormReport:
    """sum_i sup_x max_{|k|,|q|<=p} |x^k D^q u_i(x)| with torus coordinates x.

    The x^k weight and the derivative separate, so the inner max is the
    product of the largest monomial weight and the largest derivative at x.
    """
    if int(p) != p or not 0 <= p <= MAX_NORM_ORDER:
        raise ValueError(f"norm order must be an integer in [0, {MAX_NORM_ORDER}], got {p}")
    _check_shape(u.components, grid)
    x1, x2, x3 = grid.coordinates()
    weight = np.zeros(grid.shape)
    for k in _multi_indices(p):
        np.maximum(weight, np.abs(x1 ** k[0] * x2 ** k[1] * x3 ** k[2]), out=weight)
    deriv = _derivative_sup(fft3(u.components), grid, p)
    value = sum(float(np.max(weight * deriv[i])) for i in range(3))
    return CountableNormReport(int(p), value)


def c2_norm(u_hat: np.ndarray, grid: WavenumberGrid) -> float:
    """max over components, points and |q| <= 2 of |D^q u_i|."""
    return float(np.max(_derivative_sup(u_hat, grid, 2)))
