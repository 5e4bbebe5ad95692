"""Pseudo-spectral Navier-Stokes on the periodic torus via windowed Picard iteration of the mild form."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .diagnostics import (
    CountableNormReport,
    EnergyRecord,
    c2_norm,
    countable_norm,
    divergence_ratio,
    energy_record,
    l2_norm,
    momentum_residual,
    pressure_gradient,
    pressure_spectrum,
)
from .grid import (
    PhysicalField3,
    ScalarSpectralField,
    SpectralField3,
    WavenumberGrid,
    build_grid,
    forward_transform,
    inverse_transform,
    spectral_derivative,
)
from .nonlinear import ForceField, convective_term, dealias, effective_force
from .operators import (
    LaplaceProbe,
    ProjectionTensor,
    SingularLaplaceSystemError,
    duhamel_integral,
    heat_factor,
    heat_propagator,
    projection_apply,
    solve_laplace_system,
)
from .picard import (
    PicardDiagnostics,
    PicardDivergenceError,
    RescaleBoundError,
    RescaleState,
    SolverAbort,
    SolverConfig,
    Trajectory,
    WindowMarcher,
    apply_S_nabla,
    compute_rescale,
    estimate_contraction,
    evolve,
    picard_window,
)
from .presets import preset_field, taylor_green_exact

__version__ = "0.1.0"

__all__ = [
    "CountableNormReport",
    "EnergyRecord",
    "c2_norm",
    "countable_norm",
    "divergence_ratio",
    "energy_record",
    "l2_norm",
    "momentum_residual",
    "pressure_gradient",
    "pressure_spectrum",
    "PhysicalField3",
    "ScalarSpectralField",
    "SpectralField3",
    "WavenumberGrid",
    "build_grid",
    "forward_transform",
    "inverse_transform",
    "spectral_derivative",
    "LaplaceProbe",
    "ProjectionTensor",
    "SingularLaplaceSystemError",
    "duhamel_integral",
    "heat_factor",
    "heat_propagator",
    "projection_apply",
    "solve_laplace_system",
    "PicardDiagnostics",
    "PicardDivergenceError",
    "RescaleBoundError",
    "RescaleState",
    "SolverAbort",
    "SolverConfig",
    "Trajectory",
    "WindowMarcher",
    "apply_S_nabla",
    "compute_rescale",
    "estimate_contraction",
    "evolve",
    "picard_window",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "ForceField",
    "convective_term",
    "dealias",
    "effective_force",
    "preset_field",
    "taylor_green_exact",
]
