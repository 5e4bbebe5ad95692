"""Windowed Picard iteration for the mild (integral) form of Navier-Stokes.

On a window [t0, t0 + dt] the velocity solves

    u(t) = B(t - t0) u(t0) + int_{t0}^{t} B(t - tau) P[f - (u.grad)u](tau) dtau

where B is the heat propagator and P the Leray projector.  The fixed point
is sought by u_{n+1} = S(u_n) from u_0 = 0, with the time integral replaced
by quadrature on the window's nodes.  Everything runs in rescaled variables
u / V, x / V, nu / V^2 and is mapped back by u = V u_V.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from .diagnostics import EnergyRecord, c2_norm, energy_record, l2_norm
from .grid import PhysicalField3, SpectralField3, WavenumberGrid, _check_shape, fft3
from .nonlinear import ForceField, convective_spectrum, resolve_force
from .operators import ProjectionTensor, duhamel_integral, heat_propagator

__all__ = [
    "SolverConfig",
    "RescaleState",
    "PicardDiagnostics",
    "Trajectory",
    "SolverAbort",
    "PicardDivergenceError",
    "RescaleBoundError",
    "compute_rescale",
    "apply_S_nabla",
    "picard_window",
    "evolve",
    "estimate_contraction",
    "WindowMarcher",
]

log = logging.getLogger(__name__)

ForceLike = ForceField | Callable[[float], ForceField] | None

DIVERGENCE_WARN = 1e-10
DIVERGENCE_REJECT = 1e-8


class SolverAbort(RuntimeError):
    """The march stopped because a runtime invariant failed."""


class PicardDivergenceError(SolverAbort):
    pass


class RescaleBoundError(SolverAbort):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``dt`` is the Picard window length.  ``snapshot_every`` thins the stored
    trajectory; when it exceeds 1 the two windows adjacent to every kept
    window are stored as well so centred time differences stay available.
    """

    nu: float
    dt: float
    t_final: float
    quadrature_nodes_per_window: int = 2
    quadrature: str = "trapezoid"
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    rescale_safety: float = 10.0
    rescale: bool = True
    dealias: bool = True
    nonlinear: bool = True
    initial_guess: str = "zero"
    divergence_patience: int = 3
    snapshot_every: int = 1
    record_iterates: bool = False

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.quadrature_nodes_per_window < 2:
            raise ValueError("need at least 2 quadrature nodes per window")
        if self.quadrature not in ("trapezoid", "midpoint"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if not 0 < self.picard_tol < 1:
            raise ValueError("picard_tol must lie in (0, 1)")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")
        if not self.rescale_safety > 1:
            raise ValueError("rescale_safety must be > 1")
        if self.initial_guess not in ("zero", "heat"):
            raise ValueError(f"unknown initial guess {self.initial_guess!r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass(frozen=True)
class RescaleState:
    V: float
    nu_V: float
    active: bool


@dataclass
class PicardDiagnostics:
    """Record of one window's fixed-point iteration.

    ``residuals[n]`` is the discrete L2 distance between iterates n+1 and n
    (max over the window's nodes).  ``error_bound[n]`` is the geometric
    bound alpha^n / (1 - alpha) * residuals[0] with alpha the largest
    observed ratio; it is infinite when that ratio is not below 1.
    """

    window: tuple[float, float]
    residuals: list[float] = field(default_factory=list)
    alpha_estimates: list[float] = field(default_factory=list)
    iterations_used: int = 0
    error_bound: list[float] = field(default_factory=list)
    converged: bool = False
    distances_to_final: list[float] | None = None


@dataclass
class Trajectory:
    snapshots: list[SpectralField3]
    diagnostics: list[PicardDiagnostics]
    energy: list[EnergyRecord]
    rescale: RescaleState
    grid: WavenumberGrid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self) -> SpectralField3:
        return self.snapshots[-1]


def compute_rescale(u0: SpectralField3, config: SolverConfig, grid: WavenumberGrid) -> RescaleState:
    """V = sigma * max(||u0||_C2, ||u0||_L2, sup|u0|, 1) and nu_V = nu / V^2."""
    if not config.rescale:
        return RescaleState(1.0, config.nu, False)
    U = u0.components
    speed = energy_record(u0, u0.time, grid).max_velocity
    V = config.rescale_safety * max(c2_norm(U, grid), l2_norm(U, grid), speed, 1.0)
    return RescaleState(V, config.nu / V**2, True)


def _window_nodes(window: tuple[float, float], count: int) -> np.ndarray:
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"empty window {window}")
    nodes = np.linspace(t0, t1, count)
    nodes[0], nodes[-1] = t0, t1
    return nodes


class _WindowOperator:
    """S on one window, with the per-node forcing cached for u(t0)."""

    def __init__(self, u_start, f, window, config, grid, tensor):
        _check_shape(u_start.components, grid)
        self.config, self.grid = config, grid
        self.tensor = tensor if tensor is not None else ProjectionTensor.from_grid(grid)
        self.t0 = float(window[0])
        self.nodes = _window_nodes(window, config.quadrature_nodes_per_window)
        self.u_start = u_start.components
        self.free = [
            heat_propagator(u_start, config.nu, t - self.t0, grid).components for t in self.nodes
        ]
        forces = [resolve_force(f, t) for t in self.nodes]
        self.force_hat = [None if fc.is_zero else fft3(fc.f.components) for fc in forces]
        self._start_forcing = None

    def forcing(self, j: int, u: np.ndarray) -> np.ndarray:
        """P[F(f) - F((u.grad)u)] at node j."""
        if u is self.u_start and self._start_forcing is not None and j == 0:
            return self._start_forcing
        g = np.zeros_like(self.u_start)
        if self.force_hat[j] is not None:
            g = g + self.force_hat[j]
        if self.config.nonlinear and np.any(u):
            conv = convective_spectrum(u, self.grid, self.config.dealias)
            mean = np.max(np.abs(conv[:, 0, 0, 0]))
            assert mean <= 1e-9 * max(np.max(np.abs(conv)), 1e-300), (
                "convective term has a nonzero mean; velocity is not divergence-free"
            )
            g = g - conv
        g = self.tensor.apply(g)
        if j == 0 and u is self.u_start:
            self._start_forcing = g
        return g

    def __call__(self, guess: Sequence[np.ndarray]) -> list[np.ndarray]:
        if len(guess) != len(self.nodes):
            raise ValueError("guess must hold one field per quadrature node")
        # node 0 always carries u(t0); reuse the cached forcing once it is exact
        g = [self.forcing(j, u) for j, u in enumerate(guess)]
        samples = [(t, SpectralField3(gj, t)) for t, gj in zip(self.nodes, g)]
        out = [self.free[0].copy()]
        for j in range(1, len(self.nodes)):
            integral = duhamel_integral(
                samples[: j + 1], self.config.nu, self.t0, self.nodes[j], self.grid,
                rule=self.config.quadrature,
            )
            out.append(self.free[j] + integral.components)
        return out


def apply_S_nabla(
    u_guess: Sequence[SpectralField3],
    u_window_start: SpectralField3,
    f: ForceLike,
    window: tuple[float, float],
    config: SolverConfig,
    grid: WavenumberGrid,
    tensor: ProjectionTensor | None = None,
) -> list[SpectralField3]:
    """One application of the composite operator to node samples of a guess."""
    op = _WindowOperator(u_window_start, f, window, config, grid, tensor)
    out = op([u.components for u in u_guess])
    return [SpectralField3(o, t) for o, t in zip(out, op.nodes)]


def _distance(a: Sequence[np.ndarray], b: Sequence[np.ndarray], grid: WavenumberGrid) -> float:
    return max(l2_norm(x - y, grid) for x, y in zip(a, b))


def _size(a: Sequence[np.ndarray], grid: WavenumberGrid) -> float:
    return max(l2_norm(x, grid) for x in a)


def picard_window(
    u_window_start: SpectralField3,
    f: ForceLike,
    window: tuple[float, float],
    config: SolverConfig,
    grid: WavenumberGrid,
    tensor: ProjectionTensor | None = None,
) -> tuple[SpectralField3, PicardDiagnostics]:
    """Iterate S on one window until the relative update falls below picard_tol.

    Hitting ``picard_max_iter`` leaves ``converged`` False.  Residual growth
    on ``divergence_patience`` consecutive iterations raises
    PicardDivergenceError.
    """
    op = _WindowOperator(u_window_start, f, window, config, grid, tensor)
    if config.initial_guess == "heat":
        current = [x.copy() for x in op.free]
    else:
        current = [np.zeros_like(op.u_start) for _ in op.nodes]
    diag = PicardDiagnostics(window=(float(window[0]), float(window[1])))
    iterates = [current] if config.record_iterates else None
    growth = 0

    for it in range(1, config.picard_max_iter + 1):
        new = op(current)
        new[0] = op.u_start  # identical values; keeps the forcing cache hit
        r = _distance(new, current, grid)
        if not math.isfinite(r):
            raise PicardDivergenceError(f"non-finite Picard residual on window {window}")
        if diag.residuals:
            prev = diag.residuals[-1]
            if prev > 0:
                diag.alpha_estimates.append(r / prev)
            growth = growth + 1 if r > prev else 0
        diag.residuals.append(r)
        diag.iterations_used = it
        current = new
        if iterates is not None:
            iterates.append(new)
        if growth >= config.divergence_patience:
            raise PicardDivergenceError(
                f"Picard residual grew on {growth} consecutive iterations in window "
                f"{window} (residuals {diag.residuals}); the window map is not "
                "contracting: reduce dt or increase rescale_safety"
            )
        if r <= config.picard_tol * _size(new, grid):
            diag.converged = True
            break
    else:
        log.warning("Picard iteration hit the cap of %d on window %s", config.picard_max_iter, window)

    alpha = max(diag.alpha_estimates, default=0.0)
    r1 = diag.residuals[0]
    diag.error_bound = [
        alpha**n / (1 - alpha) * r1 if alpha < 1 else math.inf
        for n in range(diag.iterations_used + 1)
    ]
    if iterates is not None:
        diag.distances_to_final = [_distance(u, current, grid) for u in iterates]
    return SpectralField3(current[-1], float(window[1])), diag


def estimate_contraction(diag: PicardDiagnostics) -> float:
    """Largest observed ratio of successive residuals."""
    if len(diag.residuals) < 2:
        raise ValueError("contraction estimate needs at least 2 recorded residuals")
    return max(diag.alpha_estimates, default=0.0)


def _scaled_force(f: ForceLike, V: float) -> ForceLike:
    if f is None or V == 1.0:
        return f

    def scaled(t: float) -> ForceField:
        fc = resolve_force(f, t)
        if fc.is_zero:
            return ForceField(None, t)
        return ForceField(PhysicalField3(fc.f.components / V, t), t)

    return scaled


def _divergence_free_start(u0: SpectralField3, grid: WavenumberGrid, tensor) -> SpectralField3:
    projected = tensor.apply(u0.components)
    size = l2_norm(u0.components, grid)
    correction = l2_norm(u0.components - projected, grid) / size if size > 0 else 0.0
    if correction > DIVERGENCE_REJECT:
        raise ValueError(
            f"initial velocity is not divergence-free (relative correction {correction:.3e})"
        )
    if correction > DIVERGENCE_WARN:
        warnings.warn(
            f"initial velocity projected onto divergence-free fields "
            f"(relative correction {correction:.3e})",
            stacklevel=3,
        )
    return SpectralField3(projected, u0.time)


@dataclass
class WindowStep:
    index: int
    velocity: SpectralField3
    diagnostics: PicardDiagnostics
    energy: EnergyRecord


class WindowMarcher:
    """Marches windows from u0.time to config.t_final, one ``WindowStep`` at a time.

    ``rescale`` may be supplied to reuse a V chosen elsewhere (e.g. from a
    checkpoint); otherwise it is computed from the initial data.
    """

    def __init__(
        self,
        u0: SpectralField3,
        f: ForceLike,
        config: SolverConfig,
        grid: WavenumberGrid,
        rescale: RescaleState | None = None,
    ):
        _check_shape(u0.components, grid)
        self.config, self.grid = config, grid
        self.u0 = _divergence_free_start(u0, grid, ProjectionTensor.from_grid(grid))
        self.rescale = rescale if rescale is not None else compute_rescale(self.u0, config, grid)
        V = self.rescale.V
        self.grid_V = grid.rescaled(V) if V != 1.0 else grid
        self.config_V = replace(config, nu=self.rescale.nu_V)
        self.tensor_V = ProjectionTensor.from_grid(self.grid_V)
        self.f = f
        self.f_V = _scaled_force(f, V)
        self.initial_energy = energy_record(self.u0, self.u0.time, grid)
        self._check_bound(self.initial_energy)

    @property
    def window_count(self) -> int:
        span = self.config.t_final - self.u0.time
        if span <= 0:
            return 0
        return max(1, math.ceil(span / self.config.dt - 1e-9))

    def window(self, k: int) -> tuple[float, float]:
        t0, dt = self.u0.time, self.config.dt
        end = t0 + k * dt if k < self.window_count else self.config.t_final
        return t0 + (k - 1) * dt, end

    def _check_bound(self, rec: EnergyRecord) -> None:
        scaled = rec.max_velocity / self.rescale.V
        if self.rescale.active and scaled >= 1:
            raise RescaleBoundError(
                f"rescaled speed {scaled:.3g} >= 1 at t={rec.t:g}; increase rescale_safety"
            )

    def __iter__(self) -> Iterator[WindowStep]:
        V = self.rescale.V
        u_V = SpectralField3(self.u0.components / V, self.u0.time)
        for k in range(1, self.window_count + 1):
            u_V, diag = picard_window(
                u_V, self.f_V, self.window(k), self.config_V, self.grid_V, self.tensor_V
            )
            u = SpectralField3(u_V.components * V, u_V.time)
            rec = energy_record(u, u.time, self.grid)
            self._check_bound(rec)
            yield WindowStep(k, u, diag, rec)


def _keep(k: int, count: int, every: int) -> bool:
    if every == 1 or k == count:
        return True
    return k % every in (0, 1, every - 1)


def evolve(
    u0: SpectralField3,
    f: ForceLike,
    config: SolverConfig,
    grid: WavenumberGrid,
    rescale: RescaleState | None = None,
) -> Trajectory:
    """March the mild-solution equation over [u0.time, config.t_final]."""
    marcher = WindowMarcher(u0, f, config, grid, rescale)
    snapshots = [marcher.u0]
    energy = [marcher.initial_energy]
    diagnostics = []
    count = marcher.window_count
    for step in marcher:
        diagnostics.append(step.diagnostics)
        energy.append(step.energy)
        if _keep(step.index, count, config.snapshot_every):
            snapshots.append(step.velocity)
    return Trajectory(snapshots, diagnostics, energy, marcher.rescale, grid)
