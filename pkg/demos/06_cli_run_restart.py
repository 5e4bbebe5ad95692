"""Command-line runs, CSV output and checkpoint restarts.

Equivalent shell session::

    mildns --grid 16 --preset random_solenoidal --seed 3 --dt 0.01 --t-final 0.2 \
           --checkpoint-every 10 --out run_a
    mildns --grid 16 --preset from_checkpoint --checkpoint run_a/checkpoint_000010.mfld \
           --dt 0.01 --t-final 0.2 --out run_b

Run: python demos/06_cli_run_restart.py
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from mildns.checkpoint import load_checkpoint
from mildns.cli import main

common = ["--grid", "16", "--nu", "0.1", "--dt", "0.01", "--t-final", "0.2"]
with tempfile.TemporaryDirectory() as tmp:
    a, b = Path(tmp, "run_a"), Path(tmp, "run_b")
    code = main(common + ["--preset", "random_solenoidal", "--seed", "3", "--checkpoint-every", "10", "--out", str(a)])
    print(f"first run exit {code}; files: {sorted(p.name for p in a.iterdir())}")

    with open(a / "timeseries.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows[::5]:
        print(f"  t={float(r['t']):.2f} E={float(r['kinetic_energy']):.6f} residual={r['momentum_residual']}")

    code = main(common + ["--preset", "from_checkpoint", "--checkpoint", str(a / "checkpoint_000010.mfld"), "--out", str(b)])
    print(f"restart exit {code}")
    full = load_checkpoint(a / "checkpoint_000020.mfld")
    resumed = load_checkpoint(b / "checkpoint_000010.mfld")
    gap = np.linalg.norm(full.velocity - resumed.velocity) / np.linalg.norm(full.velocity)
    print(f"uninterrupted vs restarted at t={full.t:g}: relative gap {gap:.1e} (V {full.V:.2f} reused)")
