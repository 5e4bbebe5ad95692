"""Run orchestration and the ``mildns`` command line.

A run marches the windowed solver from a preset, streams one CSV row per
window, writes checkpoints at a fixed cadence and echoes the resolved
configuration to ``manifest.json``.

Exit status: 0 success, 2 invalid configuration, 3 I/O failure,
4 solver abort (Picard divergence or rescale bound violated).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .diagnostics import EnergyRecord, momentum_residual_at
from .grid import SpectralField3, build_grid, forward_transform, inverse_transform
from .picard import RescaleState, SolverAbort, SolverConfig, WindowMarcher
from .presets import PRESETS, preset_field

__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_SOLVER",
    "CSV_COLUMNS",
    "RunManifest",
    "run",
    "main",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4

CSV_COLUMNS = (
    "t",
    "kinetic_energy",
    "l2_norm",
    "max_velocity",
    "divergence_max",
    "picard_iterations",
    "alpha_estimate",
    "momentum_residual",
)
FORMATS = frozenset({"csv", "raw"})


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run.

    ``checkpoint_every`` = K writes a checkpoint after every K-th window;
    0 writes only the final state.  Checkpoints need ``raw`` in ``formats``.
    """

    config: SolverConfig
    output_dir: Path
    preset: str = "taylor_green"
    preset_params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    formats: frozenset[str] = FORMATS
    n: int = 32
    domain_length: float = 2 * math.pi
    checkpoint_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "formats", frozenset(self.formats))
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if not self.formats <= FORMATS:
            raise ValueError(f"formats must be a subset of {sorted(FORMATS)}, got {sorted(self.formats)}")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")

    def resolved(self) -> dict[str, Any]:
        return {
            "config": asdict(self.config),
            "grid": {"n": self.n, "domain_length": self.domain_length},
            "preset": {"name": self.preset, "params": _jsonable(self.preset_params)},
            "seed": self.seed,
            "formats": sorted(self.formats),
            "checkpoint_every": self.checkpoint_every,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _fmt(x: float | int) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "nan" if math.isnan(x) else f"{x:.17g}"


def _row(rec: EnergyRecord, iterations: int, alpha: float, residual: float) -> list[str]:
    return [
        _fmt(v)
        for v in (
            rec.t,
            rec.kinetic_energy,
            rec.l2_norm,
            rec.max_velocity,
            rec.divergence_max,
            iterations,
            alpha,
            residual,
        )
    ]


def _prepare_output(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    probe.write_bytes(b"")
    probe.unlink()


def _initial_state(manifest: RunManifest, grid):
    """Initial spectral velocity and, for restarts, the stored rescale."""
    params = dict(manifest.preset_params)
    rescale = None
    if manifest.preset == "from_checkpoint":
        ck = load_checkpoint(params.get("path", ""))
        if ck.dealias != manifest.config.dealias:
            log.warning("checkpoint dealias flag %s differs from the run's %s", ck.dealias, manifest.config.dealias)
        if ck.nu != manifest.config.nu:
            log.warning("checkpoint nu %g differs from the run's %g", ck.nu, manifest.config.nu)
        V = ck.V
        rescale = RescaleState(V, manifest.config.nu / V**2, manifest.config.rescale)
    u0 = preset_field(manifest.preset, params, grid, manifest.seed)
    return forward_transform(u0, grid), rescale


def _checkpoint(path: Path, u: SpectralField3, manifest: RunManifest, V: float, grid) -> None:
    phys = inverse_transform(u, grid)
    ck = Checkpoint(
        grid.n, grid.domain_length, manifest.config.nu, u.time, V, manifest.config.dealias, phys.components
    )
    save_checkpoint(path, ck)


def _march(manifest: RunManifest, out: Path, stream) -> None:
    cfg = manifest.config
    grid = build_grid(manifest.n, manifest.domain_length)
    u0, rescale = _initial_state(manifest, grid)
    marcher = WindowMarcher(u0, None, cfg, grid, rescale)
    V = marcher.rescale.V

    info = manifest.resolved()
    info["rescale"] = asdict(marcher.rescale)
    info["t_start"] = marcher.u0.time
    info["window_count"] = marcher.window_count
    (out / "manifest.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")

    writer = csv.writer(stream, lineterminator="\n") if stream is not None else None
    if writer:
        writer.writerow(CSV_COLUMNS)

    # (velocity, energy record, iterations, alpha); a row is emitted once its successor exists
    history: deque = deque(maxlen=3)
    history.append((marcher.u0, marcher.initial_energy, 0, math.nan))

    def emit(residual: float) -> None:
        _, rec, its, alpha = history[-2] if len(history) >= 2 else history[-1]
        if writer:
            writer.writerow(_row(rec, its, alpha, residual))

    raw = "raw" in manifest.formats
    count = marcher.window_count
    for step in marcher:
        d = step.diagnostics
        alpha = max(d.alpha_estimates) if d.alpha_estimates else math.nan
        history.append((step.velocity, step.energy, d.iterations_used, alpha))
        if len(history) == 3:
            triple = tuple(h[0] for h in history)
            emit(momentum_residual_at(triple, None, cfg, grid))
        else:
            emit(math.nan)
        if raw and (
            step.index == count
            or (manifest.checkpoint_every and step.index % manifest.checkpoint_every == 0)
        ):
            _checkpoint(out / f"checkpoint_{step.index:06d}.mfld", step.velocity, manifest, V, grid)
    if writer:
        _, rec, its, alpha = history[-1]
        writer.writerow(_row(rec, its, alpha, math.nan))
    if raw and count == 0:
        _checkpoint(out / "checkpoint_000000.mfld", marcher.u0, manifest, V, grid)


def run(manifest: RunManifest) -> int:
    """Execute a run; returns the process exit status and writes into ``output_dir``."""
    out = manifest.output_dir
    try:
        _prepare_output(out)
    except OSError as exc:
        print(f"mildns: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if "csv" in manifest.formats:
            with open(out / "timeseries.csv", "w", newline="") as stream:
                _march(manifest, out, stream)
        else:
            _march(manifest, out, None)
    except SolverAbort as exc:
        print(f"mildns: solver aborted: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, CheckpointError) as exc:
        print(f"mildns: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mildns: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mildns", description=__doc__.split("\n\n")[0])
    p.add_argument("--grid", type=int, default=32, metavar="N", help="points per direction (power of 2)")
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-3, help="Picard window length")
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--preset", choices=PRESETS, default="taylor_green")
    p.add_argument("--amplitude", type=float, default=1.0, metavar="A")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--picard-tol", type=float, default=1e-12)
    p.add_argument("--picard-max-iter", type=int, default=50, metavar="N")
    p.add_argument("--rescale-safety", type=float, default=10.0)
    p.add_argument("--no-dealias", action="store_true")
    p.add_argument("--out", type=Path, default=Path("run"), metavar="DIR")
    p.add_argument("--checkpoint-every", type=int, default=0, metavar="K")
    p.add_argument("--checkpoint", type=Path, metavar="PATH", help="input file for --preset from_checkpoint")
    p.add_argument("--formats", default="csv,raw", help="comma-separated subset of csv,raw")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _preset_params(args) -> dict[str, Any]:
    if args.preset in ("taylor_green", "random_solenoidal"):
        return {"amplitude": args.amplitude}
    if args.preset == "single_mode":
        return {"gamma": (0, 1, 0), "amplitude": (args.amplitude, 0.0, 0.0)}
    if args.checkpoint is None:
        raise ValueError("--preset from_checkpoint requires --checkpoint PATH")
    return {"path": args.checkpoint}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        config = SolverConfig(
            nu=args.nu,
            dt=args.dt,
            t_final=args.t_final,
            picard_tol=args.picard_tol,
            picard_max_iter=args.picard_max_iter,
            rescale_safety=args.rescale_safety,
            dealias=not args.no_dealias,
        )
        manifest = RunManifest(
            config=config,
            output_dir=args.out,
            preset=args.preset,
            preset_params=_preset_params(args),
            seed=args.seed,
            formats=frozenset(s.strip() for s in args.formats.split(",") if s.strip()),
            n=args.grid,
            checkpoint_every=args.checkpoint_every,
        )
    except ValueError as exc:
        print(f"mildns: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
