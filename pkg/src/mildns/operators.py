"""Integral operators of the mild-solution equation.

All lattice operators here are diagonal in gamma (per-mode multipliers or
per-mode 3x3 matrices), so they are independent of the transform
normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import SpectralField3, WavenumberGrid, _check_shape

__all__ = [
    "ProjectionTensor",
    "LaplaceProbe",
    "SingularLaplaceSystemError",
    "projection_apply",
    "heat_propagator",
    "heat_factor",
    "duhamel_integral",
    "duhamel_weights",
    "solve_laplace_system",
    "laplace_determinant",
]


@dataclass(frozen=True, eq=False)
class ProjectionTensor:
    """P_ij(gamma) = delta_ij - gamma_i gamma_j / |gamma|^2 on the lattice.

    Stored as the three diagonal fractions and three off-diagonal ones.
    At gamma = 0 the tensor is the identity.  Built from the derivative
    wavenumbers, so on a Nyquist plane that axis drops out of gamma and
    P annihilates exactly the lattice's discrete gradients.
    """

    p11: np.ndarray
    p22: np.ndarray
    p33: np.ndarray
    p12: np.ndarray
    p13: np.ndarray
    p23: np.ndarray
    # gamma and gamma / |gamma|^2, for applying P = I - g g^T / |g|^2 in rank-one form
    _g: tuple = field(repr=False, default=())
    _g_over_gsq: tuple = field(repr=False, default=())

    @classmethod
    def from_grid(cls, grid: WavenumberGrid) -> "ProjectionTensor":
        g1, g2, g3 = grid.derivative_gamma
        gsq = g1**2 + g2**2 + g3**2
        zero = gsq == 0
        inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, gsq))
        p11 = np.where(zero, 1.0, (g2**2 + g3**2) * inv)
        p22 = np.where(zero, 1.0, (g3**2 + g1**2) * inv)
        p33 = np.where(zero, 1.0, (g1**2 + g2**2) * inv)
        p12 = -(g1 * g2) * inv
        p13 = -(g1 * g3) * inv
        p23 = -(g2 * g3) * inv
        return cls(p11, p22, p33, p12, p13, p23, (g1, g2, g3), (g1 * inv, g2 * inv, g3 * inv))

    def matrix_at(self, i: int, j: int, k: int) -> np.ndarray:
        """Dense 3x3 tensor at lattice point (i, j, k)."""
        at = lambda a: float(np.broadcast_to(a, self.p11.shape)[i, j, k])
        a, b, c = at(self.p11), at(self.p22), at(self.p33)
        d, e, f = at(self.p12), at(self.p13), at(self.p23)
        return np.array([[a, d, e], [d, b, f], [e, f, c]])

    def apply(self, v: np.ndarray) -> np.ndarray:
        """P(gamma) v(gamma) for v of shape (3, n, n, n)."""
        if self._g:
            g1, g2, g3 = self._g
            dot = g1 * v[0] + g2 * v[1] + g3 * v[2]
            q1, q2, q3 = self._g_over_gsq
            return np.stack([v[0] - q1 * dot, v[1] - q2 * dot, v[2] - q3 * dot])
        v1, v2, v3 = v[0], v[1], v[2]
        return np.stack(
            [
                self.p11 * v1 + self.p12 * v2 + self.p13 * v3,
                self.p12 * v1 + self.p22 * v2 + self.p23 * v3,
                self.p13 * v1 + self.p23 * v2 + self.p33 * v3,
            ]
        )


def projection_apply(
    f_hat: SpectralField3, grid: WavenumberGrid, tensor: ProjectionTensor | None = None
) -> SpectralField3:
    """Remove the gradient part of ``f_hat`` mode by mode."""
    _check_shape(f_hat.components, grid)
    if tensor is None:
        tensor = ProjectionTensor.from_grid(grid)
    return SpectralField3(tensor.apply(f_hat.components), f_hat.time)


def heat_factor(grid: WavenumberGrid, nu: float, dt: float) -> np.ndarray:
    """exp(-nu |gamma|^2 dt) on the lattice."""
    if dt < 0:
        raise ValueError(f"heat propagator needs dt >= 0, got {dt}")
    if nu < 0:
        raise ValueError(f"viscosity must be >= 0, got {nu}")
    return np.exp(-nu * dt * grid.gamma_sq)


def heat_propagator(u_hat: SpectralField3, nu: float, dt: float, grid: WavenumberGrid) -> SpectralField3:
    """Advance the linear viscous part exactly by ``dt``."""
    _check_shape(u_hat.components, grid)
    if dt == 0 or nu == 0:
        if dt < 0:
            raise ValueError(f"heat propagator needs dt >= 0, got {dt}")
        return SpectralField3(u_hat.components.copy(), u_hat.time + dt)
    return SpectralField3(u_hat.components * heat_factor(grid, nu, dt), u_hat.time + dt)


def duhamel_weights(taus: Sequence[float], rule: str = "trapezoid") -> list[tuple[float, float]]:
    """Quadrature (node time, weight) pairs on consecutive samples.

    ``trapezoid`` puts the kernel at the nodes.  ``midpoint`` evaluates the
    kernel at each interval midpoint against the averaged pair of samples; it
    is returned as per-interval entries ``(tau_mid, width)``.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size < 2:
        raise ValueError("Duhamel quadrature needs at least 2 samples")
    widths = np.diff(taus)
    if np.any(widths < 0):
        raise ValueError("samples must be sorted by time")
    if rule == "trapezoid":
        w = np.zeros_like(taus)
        w[:-1] += 0.5 * widths
        w[1:] += 0.5 * widths
        return list(zip(taus.tolist(), w.tolist()))
    if rule == "midpoint":
        mids = 0.5 * (taus[1:] + taus[:-1])
        return list(zip(mids.tolist(), widths.tolist()))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def duhamel_integral(
    forcing_samples: Sequence[tuple[float, SpectralField3]],
    nu: float,
    t_start: float,
    t_end: float,
    grid: WavenumberGrid,
    rule: str = "trapezoid",
) -> SpectralField3:
    """Quadrature of int_{t_start}^{t_end} exp(-nu|gamma|^2 (t_end - tau)) g(tau) dtau.

    ``forcing_samples`` are ``(tau_j, g_j)`` pairs with the projection already
    applied, sorted by tau and spanning exactly [t_start, t_end].
    """
    if len(forcing_samples) < 2:
        raise ValueError("Duhamel quadrature needs at least 2 samples")
    taus = [float(t) for t, _ in forcing_samples]
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("forcing samples must be sorted by time")
    span = max(abs(t_end - t_start), 1.0)
    if abs(taus[0] - t_start) > 1e-12 * span or abs(taus[-1] - t_end) > 1e-12 * span:
        raise ValueError("forcing samples must cover [t_start, t_end] exactly")
    values = [g.components for _, g in forcing_samples]
    for v in values:
        _check_shape(v, grid)

    out = np.zeros_like(values[0], dtype=complex)
    if rule == "trapezoid":
        for (tau, w), g in zip(duhamel_weights(taus, rule), values):
            if w == 0:
                continue
            out += (w * heat_factor(grid, nu, t_end - tau)) * g
    elif rule == "midpoint":
        for j, (tau, w) in enumerate(duhamel_weights(taus, rule)):
            out += (w * heat_factor(grid, nu, t_end - tau)) * (0.5 * (values[j] + values[j + 1]))
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return SpectralField3(out, t_end)


class SingularLaplaceSystemError(ZeroDivisionError):
    """eta + nu |gamma|^2 = 0: the transformed 3x3 system has no unique solution."""


@dataclass(frozen=True)
class LaplaceProbe:
    """One (gamma, eta, F, U0) sample of the Laplace-domain system.

    ``gamma`` must have all three components nonzero and ``u0_hat`` must be
    orthogonal to ``gamma``.
    """

    gamma: np.ndarray
    eta: complex
    f_tilde_hat: np.ndarray
    nu: float
    u0_hat: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        f = np.asarray(self.f_tilde_hat, dtype=complex)
        u0 = np.asarray(self.u0_hat, dtype=complex)
        if g.shape != (3,) or f.shape != (3,) or u0.shape != (3,):
            raise ValueError("gamma, f_tilde_hat and u0_hat must be 3-vectors")
        if np.any(g == 0):
            raise ValueError("every gamma component must be nonzero")
        if self.nu < 0:
            raise ValueError("viscosity must be >= 0")
        scale = np.linalg.norm(g) * max(np.linalg.norm(u0), 1e-300)
        if abs(g @ u0) > 1e-12 * scale:
            raise ValueError("u0_hat is not orthogonal to gamma")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "f_tilde_hat", f)
        object.__setattr__(self, "u0_hat", u0)
        object.__setattr__(self, "eta", complex(self.eta))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "LaplaceProbe":
        """Well-conditioned random probe (|gamma_i| in [0.1, 10], eta right of the pole)."""
        gamma = rng.uniform(0.1, 10.0, 3) * rng.choice([-1.0, 1.0], 3)
        nu = rng.uniform(0.0, 2.0)
        shift = nu * gamma @ gamma
        eta = complex(-shift + rng.uniform(0.1, 10.0), rng.uniform(-10.0, 10.0))
        f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        u0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        u0 = u0 - gamma * (gamma @ u0) / (gamma @ gamma)
        return cls(gamma, eta, f, nu, u0)


def _pole(probe: LaplaceProbe) -> complex:
    g = probe.gamma
    a = probe.eta + probe.nu * (g @ g)
    if a == 0:
        raise SingularLaplaceSystemError("eta = -nu |gamma|^2: singular transformed system")
    if probe.eta.real <= -probe.nu * (g @ g):
        raise ValueError("Re(eta) must exceed -nu |gamma|^2")
    return a


def laplace_determinant(probe: LaplaceProbe) -> complex:
    """[eta + nu|gamma|^2]^2 |gamma|^2 / gamma_1."""
    g = probe.gamma
    a = probe.eta + probe.nu * (g @ g)
    return a**2 * (g @ g) / g[0]


def laplace_matrix(probe: LaplaceProbe) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrix and right-hand side of the eliminated system."""
    g1, g2, g3 = probe.gamma
    a = probe.eta + probe.nu * (probe.gamma @ probe.gamma)
    F, U0 = probe.f_tilde_hat, probe.u0_hat
    r2, r3 = g2 / g1, g3 / g1
    A = np.array(
        [
            [a * r2, -a, 0.0],
            [a * r3, 0.0, -a],
            [g1, g2, g3],
        ],
        dtype=complex,
    )
    b = np.array(
        [
            (r2 * F[0] - F[1]) + (r2 * U0[0] - U0[1]),
            (r3 * F[0] - F[2]) + (r3 * U0[0] - U0[2]),
            0.0,
        ],
        dtype=complex,
    )
    return A, b


def solve_laplace_system(probe: LaplaceProbe) -> tuple[np.ndarray, np.ndarray, complex]:
    """Closed-form and direct solutions of the transformed system, plus its determinant.

    Returns ``(closed_form, direct_solve, determinant)``.  The closed form is
    the projected force plus initial data, both divided by eta + nu|gamma|^2;
    the direct path hands the 3x3 matrix to LAPACK.
    """
    a = _pole(probe)
    g1, g2, g3 = probe.gamma
    gsq = probe.gamma @ probe.gamma
    F1, F2, F3 = probe.f_tilde_hat
    U0 = probe.u0_hat
    denom = gsq * a
    closed = np.array(
        [
            ((g2**2 + g3**2) * F1 - g1 * g2 * F2 - g1 * g3 * F3) / denom + U0[0] / a,
            ((g3**2 + g1**2) * F2 - g2 * g3 * F3 - g2 * g1 * F1) / denom + U0[1] / a,
            ((g1**2 + g2**2) * F3 - g3 * g1 * F1 - g3 * g2 * F2) / denom + U0[2] / a,
        ]
    )
    A, b = laplace_matrix(probe)
    direct = np.linalg.solve(A, b)
    return closed, direct, laplace_determinant(probe)
