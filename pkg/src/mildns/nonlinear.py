"""Effective force f - (u.grad)u, evaluated pseudo-spectrally."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    PhysicalField3,
    SpectralField3,
    WavenumberGrid,
    _check_shape,
    fft3,
    ifft3_real,
)

__all__ = [
    "ForceField",
    "convective_term",
    "convective_spectrum",
    "effective_force",
    "dealias",
    "resolve_force",
]


@dataclass(frozen=True, eq=False)
class ForceField:
    """Externally applied body force at one instant.

    ``f is None`` stands for the identically zero force.
    """

    f: PhysicalField3 | None = None
    time: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.f is None or not np.any(self.f.components)

    def at(self, time: float) -> "ForceField":
        """Same (steady) force stamped with another time."""
        if self.f is None:
            return ForceField(None, time)
        return ForceField(PhysicalField3(self.f.components, time), time)


def resolve_force(f, time: float) -> ForceField:
    """Force at ``time`` from None, a steady ForceField or a callable of t."""
    if f is None:
        return ForceField(None, time)
    if isinstance(f, ForceField):
        return f.at(time)
    out = f(time)
    if not isinstance(out, ForceField):
        raise TypeError("force callable must return a ForceField")
    return out


def dealias(field: SpectralField3, grid: WavenumberGrid) -> SpectralField3:
    """Zero every mode outside the 2/3-rule mask."""
    _check_shape(field.components, grid)
    return SpectralField3(field.components * grid.dealias_mask, field.time)


def convective_spectrum(u_hat: np.ndarray, grid: WavenumberGrid, dealiased: bool = True) -> np.ndarray:
    """Spectrum of (u.grad)u given the velocity spectrum, shape (3, n, n, n).

    Derivatives are taken in spectral space, products formed on the grid.
    """
    u = ifft3_real(u_hat)
    out = np.zeros_like(u)
    for n in range(3):
        grad_n = ifft3_real(u_hat * grid.derivative_symbol(n))
        out += u[n] * grad_n
    spec = fft3(out)
    if dealiased:
        spec *= grid.dealias_mask
    return spec


def convective_term(u: PhysicalField3, grid: WavenumberGrid, dealiased: bool = True) -> PhysicalField3:
    """(u.grad)u_k = sum_n u_n d u_k / d x_n on the collocation grid."""
    _check_shape(u.components, grid)
    spec = convective_spectrum(fft3(u.components), grid, dealiased)
    return PhysicalField3(ifft3_real(spec), u.time)


def effective_force(
    f: ForceField, u: PhysicalField3, grid: WavenumberGrid, dealiased: bool = True
) -> PhysicalField3:
    """f - (u.grad)u."""
    if not np.isclose(f.time, u.time, rtol=0, atol=1e-12 * max(1.0, abs(u.time))):
        raise ValueError(f"force time {f.time} does not match velocity time {u.time}")
    conv = convective_term(u, grid, dealiased).components
    if f.f is None:
        return PhysicalField3(-conv, u.time)
    _check_shape(f.f.components, grid)
    return PhysicalField3(f.f.components - conv, u.time)
