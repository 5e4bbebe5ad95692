"""Presets, checkpoint format and run orchestration."""

import csv
import json
import struct

import numpy as np
import pytest

from mildns import (
    SolverConfig,
    energy_record,
    forward_transform,
    preset_field,
)
from mildns.checkpoint import (
    MAGIC,
    Checkpoint,
    CheckpointError,
    CheckpointSizeError,
    CheckpointVersionError,
    load_checkpoint,
    save_checkpoint,
)
from mildns.cli import CSV_COLUMNS, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER, RunManifest, main, run
from mildns.diagnostics import divergence_ratio


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


class TestPresets:
    def test_taylor_green(self, grid16):
        u = preset_field("taylor_green", {"amplitude": 1.0}, grid16)
        rec = energy_record(forward_transform(u, grid16), 0.0, grid16)
        assert rec.divergence_max < 1e-12
        assert rec.l2_norm**2 == pytest.approx(0.5 * (2 * np.pi) ** 3, rel=1e-13)
        x1, x2, _ = grid16.coordinates()
        np.testing.assert_allclose(u.components[0], np.broadcast_to(np.sin(x1) * np.cos(x2), grid16.shape), atol=1e-15)

    def test_single_mode_one_pair(self, grid8):
        u = preset_field("single_mode", {"gamma": (0, 1, 0), "amplitude": (1.0, 0.0, 0.5)}, grid8)
        U = forward_transform(u, grid8).components
        big = np.argwhere(np.abs(U) > 1e-9)
        assert {tuple(b) for b in big} == {(0, 0, 1, 0), (0, 0, 7, 0), (2, 0, 1, 0), (2, 0, 7, 0)}

    def test_single_mode_rejects_compressible(self, grid8):
        with pytest.raises(ValueError, match="orthogonal"):
            preset_field("single_mode", {"gamma": (1, 0, 0), "amplitude": (1.0, 0.0, 0.0)}, grid8)

    def test_random_deterministic(self, grid16):
        a = preset_field("random_solenoidal", {}, grid16, seed=11)
        b = preset_field("random_solenoidal", {}, grid16, seed=11)
        c = preset_field("random_solenoidal", {}, grid16, seed=12)
        np.testing.assert_array_equal(a.components, b.components)
        assert not np.array_equal(a.components, c.components)

    def test_random_energy_and_band(self, grid16):
        u = preset_field("random_solenoidal", {"energy": 3.5, "k_max": 3}, grid16, seed=0)
        U = forward_transform(u, grid16)
        rec = energy_record(U, 0.0, grid16)
        assert rec.kinetic_energy == pytest.approx(3.5, rel=1e-12)
        assert rec.divergence_max < 1e-12
        assert divergence_ratio(U.components, grid16) < 1e-12
        idx = grid16.index
        r2 = idx[:, None, None] ** 2 + idx[None, :, None] ** 2 + idx[None, None, :] ** 2
        assert np.max(np.abs(U.components[:, r2 > 9])) < 1e-10

    @pytest.mark.parametrize(
        "name, params",
        [
            ("vortex_ring", {}),
            ("taylor_green", {"sigma": 1}),
            ("random_solenoidal", {"k_max": 9}),
            ("random_solenoidal", {"energy": -1.0}),
            ("single_mode", {"amplitude": 1.0}),
            ("from_checkpoint", {}),
        ],
    )
    def test_bad_requests(self, grid16, name, params):
        with pytest.raises(ValueError):
            preset_field(name, params, grid16)

    def test_from_checkpoint_grid_mismatch(self, tmp_path, grid8, grid16):
        path = save_checkpoint(tmp_path / "c.mfld", Checkpoint(8, 2 * np.pi, 0.1, 0.0, 10.0, True, np.zeros((3, 8, 8, 8))))
        with pytest.raises(ValueError, match="does not match"):
            preset_field("from_checkpoint", {"path": path}, grid16)
        assert preset_field("from_checkpoint", {"path": path}, grid8).time == 0.0


class TestCheckpoint:
    def _ck(self, rng, n=8):
        return Checkpoint(n, 2 * np.pi, 0.1, 0.75, 123.4, True, rng.standard_normal((3, n, n, n)))

    def test_round_trip_bit_exact(self, tmp_path, rng):
        ck = self._ck(rng)
        back = load_checkpoint(save_checkpoint(tmp_path / "a.mfld", ck))
        np.testing.assert_array_equal(back.velocity, ck.velocity)
        assert (back.n, back.domain_length, back.nu, back.t, back.V, back.dealias) == (
            ck.n, ck.domain_length, ck.nu, ck.t, ck.V, ck.dealias,
        )

    def test_layout(self, tmp_path, rng):
        ck = self._ck(rng, 4)
        data = (save_checkpoint(tmp_path / "a.mfld", ck)).read_bytes()
        assert len(data) == 42 + 3 * 4**3 * 8
        assert data[:5] == MAGIC
        assert struct.unpack_from("<I", data, 5)[0] == 4
        assert struct.unpack_from("<d", data, 25)[0] == 0.75
        assert data[41] == 1
        first = np.frombuffer(data, "<f8", count=4**3, offset=42).reshape(4, 4, 4)
        np.testing.assert_array_equal(first, ck.velocity[0])

    def test_truncated(self, tmp_path, rng):
        p = save_checkpoint(tmp_path / "a.mfld", self._ck(rng))
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(CheckpointSizeError):
            load_checkpoint(p)
        p.write_bytes(p.read_bytes()[:20])
        with pytest.raises(CheckpointSizeError):
            load_checkpoint(p)

    def test_wrong_magic(self, tmp_path, rng):
        p = save_checkpoint(tmp_path / "a.mfld", self._ck(rng))
        p.write_bytes(b"MFLD2" + p.read_bytes()[5:])
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(p)

    def test_corrupt_header(self, tmp_path, rng):
        p = save_checkpoint(tmp_path / "a.mfld", self._ck(rng))
        data = bytearray(p.read_bytes())
        data[41] = 7
        p.write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="corrupt"):
            load_checkpoint(p)

    def test_shape_checked(self):
        with pytest.raises(CheckpointSizeError):
            Checkpoint(8, 1.0, 0.1, 0.0, 1.0, True, np.zeros((3, 4, 4, 4)))


def _manifest(out, **kw):
    cfg = kw.pop("config", SolverConfig(nu=0.1, dt=1e-2, t_final=0.05))
    return RunManifest(config=cfg, output_dir=out, n=kw.pop("n", 16), **kw)


class TestRun:
    def test_taylor_green_artifacts(self, tmp_path):
        out = tmp_path / "tg"
        assert run(_manifest(out, checkpoint_every=2)) == EXIT_OK
        header, data = _read_csv(out / "timeseries.csv")
        assert tuple(header) == CSV_COLUMNS
        t, E = data[:, 0], data[:, 1]
        np.testing.assert_allclose(t, np.arange(6) * 1e-2, atol=1e-15)
        np.testing.assert_allclose(E, E[0] * np.exp(-4 * 0.1 * t), rtol=1e-12)
        assert np.isnan(data[0, 7]) and np.isnan(data[-1, 7])
        assert np.all(data[1:-1, 7] < 1e-4)
        assert np.all(data[1:, 5] >= 1)
        assert sorted(p.name for p in out.glob("*.mfld")) == [
            "checkpoint_000002.mfld", "checkpoint_000004.mfld", "checkpoint_000005.mfld",
        ]
        info = json.loads((out / "manifest.json").read_text())
        assert info["config"]["nu"] == 0.1 and info["grid"]["n"] == 16
        assert info["rescale"]["V"] > 1 and info["window_count"] == 5

    def test_zero_initial_data(self, tmp_path):
        out = tmp_path / "z"
        m = _manifest(out, preset="taylor_green", preset_params={"amplitude": 0.0}, formats={"csv"})
        assert run(m) == EXIT_OK
        _, data = _read_csv(out / "timeseries.csv")
        assert np.all(data[:, 1:5] == 0)
        assert not list(out.glob("*.mfld"))

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run(_manifest(blocker / "sub")) == EXIT_IO
        assert "cannot write" in capsys.readouterr().err

    def test_solver_abort(self, tmp_path, capsys):
        cfg = SolverConfig(nu=0.01, dt=0.5, t_final=1.0)
        m = _manifest(tmp_path / "d", config=cfg, preset="random_solenoidal", preset_params={"amplitude": 20.0})
        assert run(m) == EXIT_SOLVER
        assert "solver aborted" in capsys.readouterr().err

    def test_bad_grid_is_config_error(self, tmp_path, capsys):
        assert run(_manifest(tmp_path / "b", n=12)) == EXIT_CONFIG
        assert "power of two" in capsys.readouterr().err

    def test_manifest_validation(self, tmp_path):
        with pytest.raises(ValueError):
            _manifest(tmp_path, preset="nope")
        with pytest.raises(ValueError):
            _manifest(tmp_path, formats={"hdf5"})
        with pytest.raises(ValueError):
            _manifest(tmp_path, checkpoint_every=-1)

    def test_deterministic_csv(self, tmp_path):
        kw = dict(preset="random_solenoidal", seed=5, formats={"csv"})
        run(_manifest(tmp_path / "a", **kw))
        run(_manifest(tmp_path / "b", **kw))
        assert (tmp_path / "a" / "timeseries.csv").read_bytes() == (tmp_path / "b" / "timeseries.csv").read_bytes()

    def test_restart_consistency(self, tmp_path):
        base = dict(preset="random_solenoidal", seed=3)
        full = tmp_path / "full"
        run(_manifest(full, config=SolverConfig(nu=0.1, dt=1e-2, t_final=0.1), **base))
        first = tmp_path / "first"
        run(_manifest(first, config=SolverConfig(nu=0.1, dt=1e-2, t_final=0.05), **base))
        second = tmp_path / "second"
        code = run(
            _manifest(
                second,
                config=SolverConfig(nu=0.1, dt=1e-2, t_final=0.1),
                preset="from_checkpoint",
                preset_params={"path": first / "checkpoint_000005.mfld"},
            )
        )
        assert code == EXIT_OK
        a = load_checkpoint(full / "checkpoint_000010.mfld")
        b = load_checkpoint(second / "checkpoint_000005.mfld")
        assert b.t == pytest.approx(0.1) and b.V == a.V
        assert np.linalg.norm(a.velocity - b.velocity) < 1e-12 * np.linalg.norm(a.velocity)
        _, rows = _read_csv(second / "timeseries.csv")
        assert rows[0, 0] == pytest.approx(0.05)


class TestMain:
    def test_flags(self, tmp_path):
        out = tmp_path / "cli"
        code = main([
            "--grid", "8", "--nu", "0.2", "--dt", "0.02", "--t-final", "0.06",
            "--preset", "random_solenoidal", "--amplitude", "0.5", "--seed", "4",
            "--picard-tol", "1e-11", "--picard-max-iter", "30", "--rescale-safety", "20",
            "--no-dealias", "--out", str(out), "--checkpoint-every", "1",
        ])
        assert code == EXIT_OK
        info = json.loads((out / "manifest.json").read_text())
        cfg = info["config"]
        assert (cfg["nu"], cfg["dt"], cfg["t_final"], cfg["picard_tol"], cfg["picard_max_iter"]) == (
            0.2, 0.02, 0.06, 1e-11, 30,
        )
        assert cfg["rescale_safety"] == 20 and cfg["dealias"] is False
        assert info["seed"] == 4 and info["grid"]["n"] == 8
        assert len(list(out.glob("*.mfld"))) == 3
        ck = load_checkpoint(out / "checkpoint_000003.mfld")
        assert ck.dealias is False and ck.n == 8

    def test_from_checkpoint_needs_path(self, tmp_path, capsys):
        assert main(["--preset", "from_checkpoint", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "--checkpoint" in capsys.readouterr().err

    def test_from_checkpoint_flag(self, tmp_path):
        main(["--grid", "8", "--dt", "0.05", "--t-final", "0.1", "--out", str(tmp_path / "a")])
        code = main([
            "--grid", "8", "--dt", "0.05", "--t-final", "0.2", "--out", str(tmp_path / "b"),
            "--preset", "from_checkpoint", "--checkpoint", str(tmp_path / "a" / "checkpoint_000002.mfld"),
        ])
        assert code == EXIT_OK
        assert load_checkpoint(tmp_path / "b" / "checkpoint_000002.mfld").t == pytest.approx(0.2)

    def test_unknown_preset_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["--preset", "vortex_ring", "--out", str(tmp_path)])
        assert exc.value.code == 2
