"""Periodic grid, wavenumber lattice and the discrete Fourier pair.

Conventions
-----------
The box is the torus [0, L)^3 sampled on n points per axis, x_j = j L / n.
Forward transform is the unnormalized DFT with kernel exp(-i gamma.x);
the inverse divides by n^3.  With this sign the first-derivative symbol is
``i * gamma_s``, so two derivatives multiply by ``-gamma_s**2``.

Parseval under this normalization::

    sum_x |u(x)|^2 dx^3 = (L^3 / n^6) * sum_gamma |U(gamma)|^2
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "WavenumberGrid",
    "PhysicalField3",
    "SpectralField3",
    "ScalarSpectralField",
    "build_grid",
    "forward_transform",
    "inverse_transform",
    "spectral_derivative",
    "hermitian_asymmetry",
]

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WavenumberGrid:
    """Discrete gamma-lattice of an n^3 periodic grid.

    Attributes
    ----------
    n : int
        Points per axis (power of two, >= 4).
    domain_length : float
        Physical period L of each axis.
    index : ndarray of int, shape (n,)
        Signed integer mode numbers in FFT layout.
    gamma_axis : ndarray, shape (n,)
        Wavenumbers per axis, ``2 pi / L * index``.
    gamma_sq : ndarray, shape (n, n, n)
        ``gamma_1**2 + gamma_2**2 + gamma_3**2``.
    dealias_mask : ndarray of bool, shape (n, n, n)
        True where every ``|index_i| <= n // 3``.
    derivative_axis : ndarray, shape (n,)
        ``gamma_axis`` with the Nyquist entry set to 0.  The Nyquist index
        aliases its own negation, so odd multipliers (first derivatives,
        the projector's off-diagonal fractions) must vanish there to keep
        real fields real.
    """

    n: int
    domain_length: float
    index: np.ndarray = field(repr=False)
    gamma_axis: np.ndarray = field(repr=False)
    gamma_sq: np.ndarray = field(repr=False)
    dealias_mask: np.ndarray = field(repr=False)
    derivative_axis: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def gamma(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis wavenumbers reshaped to broadcast over the lattice."""
        g = self.gamma_axis
        return g[:, None, None], g[None, :, None], g[None, None, :]

    @property
    def derivative_gamma(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable per-axis wavenumbers seen by first derivatives."""
        g = self.derivative_axis
        return g[:, None, None], g[None, :, None], g[None, None, :]

    @property
    def dx(self) -> float:
        return self.domain_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    def derivative_symbol(self, axis: int) -> np.ndarray:
        """``i * gamma_axis`` for 0-based ``axis``, broadcastable, Nyquist zeroed.

        The Nyquist mode is its own conjugate partner, so a nonzero odd
        symbol there would break Hermitian symmetry of the result.
        """
        sym = 1j * self.derivative_axis
        shape = [1, 1, 1]
        shape[axis] = self.n
        return sym.reshape(shape)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Collocation coordinates x_1, x_2, x_3 as broadcastable arrays."""
        x = np.arange(self.n) * self.dx
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def rescaled(self, factor: float) -> "WavenumberGrid":
        """Grid for coordinates x / factor, hence wavenumbers factor * gamma."""
        return build_grid(self.n, self.domain_length / factor)


@dataclass(frozen=True, eq=False)
class PhysicalField3:
    """Velocity (u_1, u_2, u_3) at collocation points, stacked as (3, n, n, n)."""

    components: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.ndim != 4 or c.shape[0] != 3:
            raise ValueError(f"expected shape (3, n, n, n), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("physical field contains non-finite values")
        object.__setattr__(self, "components", c)

    @classmethod
    def zeros(cls, grid: WavenumberGrid, time: float = 0.0) -> "PhysicalField3":
        return cls(np.zeros((3,) + grid.shape), time)


@dataclass(frozen=True, eq=False)
class SpectralField3:
    """Fourier coefficients (U_1, U_2, U_3) over the full lattice, (3, n, n, n)."""

    components: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.components, dtype=complex)
        if c.ndim != 4 or c.shape[0] != 3:
            raise ValueError(f"expected shape (3, n, n, n), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("spectral field contains non-finite values")
        object.__setattr__(self, "components", c)

    @classmethod
    def zeros(cls, grid: WavenumberGrid, time: float = 0.0) -> "SpectralField3":
        return cls(np.zeros((3,) + grid.shape, dtype=complex), time)

    def with_time(self, time: float) -> "SpectralField3":
        return SpectralField3(self.components, time)


@dataclass(frozen=True, eq=False)
class ScalarSpectralField:
    """A single complex lattice array, e.g. the pressure spectrum."""

    values: np.ndarray
    time: float = 0.0


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def build_grid(n: int, domain_length: float = 2 * np.pi) -> WavenumberGrid:
    """Build the wavenumber lattice for an ``n**3`` periodic box of period L."""
    if int(n) != n or n < 4 or not _is_power_of_two(int(n)):
        raise ValueError(f"grid size must be a power of two >= 4, got {n}")
    if not domain_length > 0:
        raise ValueError("domain_length must be positive")
    n = int(n)
    index = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    gamma_axis = (2 * np.pi / domain_length) * index
    g1, g2, g3 = gamma_axis[:, None, None], gamma_axis[None, :, None], gamma_axis[None, None, :]
    gamma_sq = g1**2 + g2**2 + g3**2
    keep = np.abs(index) <= n // 3
    mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    derivative_axis = np.where(index == -(n // 2), 0.0, gamma_axis)
    for arr in (index, gamma_axis, gamma_sq, mask, derivative_axis):
        arr.setflags(write=False)
    return WavenumberGrid(n, float(domain_length), index, gamma_axis, gamma_sq, mask, derivative_axis)


def _check_shape(components: np.ndarray, grid: WavenumberGrid) -> None:
    if components.shape[-3:] != grid.shape:
        raise ValueError(
            f"field shape {components.shape[-3:]} does not match grid {grid.shape}"
        )


def hermitian_asymmetry(values: np.ndarray) -> float:
    """max |U(-gamma) - conj U(gamma)| / max |U| over the last three axes."""
    flipped = np.roll(np.flip(values, axis=(-3, -2, -1)), 1, axis=(-3, -2, -1))
    scale = np.max(np.abs(values))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(flipped - np.conj(values))) / scale)


def fft3(a: np.ndarray) -> np.ndarray:
    """Unnormalized forward DFT over the trailing three axes."""
    return sfft.fftn(a, axes=(-3, -2, -1))


def ifft3_real(a: np.ndarray) -> np.ndarray:
    """Inverse DFT of a Hermitian spectrum, read from the half lattice."""
    n = a.shape[-1]
    return sfft.irfftn(a[..., : n // 2 + 1], s=a.shape[-3:], axes=(-3, -2, -1))


def forward_transform(field: PhysicalField3, grid: WavenumberGrid) -> SpectralField3:
    _check_shape(field.components, grid)
    return SpectralField3(fft3(field.components), field.time)


def inverse_transform(field: SpectralField3, grid: WavenumberGrid) -> PhysicalField3:
    """Inverse transform; rejects spectra that do not describe a real field."""
    _check_shape(field.components, grid)
    asym = hermitian_asymmetry(field.components)
    if asym > HERMITIAN_TOL:
        raise ValueError(f"spectrum is not Hermitian (asymmetry {asym:.3e}); non-real field")
    return PhysicalField3(ifft3_real(field.components), field.time)


def spectral_derivative(field: SpectralField3, axis: int, grid: WavenumberGrid) -> SpectralField3:
    """d/dx_axis in spectral space; ``axis`` is 1, 2 or 3."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    _check_shape(field.components, grid)
    return SpectralField3(field.components * grid.derivative_symbol(axis - 1), field.time)
