"""Config schema, persistence contracts, CLI exit codes, MC machinery."""

import json
import os

import numpy as np
import pytest

from stozak.cli import main as cli_main
from stozak.config import ConfigError, RunConfig
from stozak.grids import Grid, SpectralField
from stozak.harness import (csv_payload_hash, mc_blowup, read_checkpoint,
                            run_scenario, wilson_interval, write_checkpoint)
from stozak.transforms import Gauge
from tests.conftest import random_field


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.scenario == "deterministic-small"

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"scenari": "x"})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"grid": {"n": 16, "resolution": 3}})

    def test_bad_values(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"grid": {"n": 24}})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"integrator": {"dt": -1.0}})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"noise": {"kind": "pink"}})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"trajectories": 0})

    def test_resolved_embedding_roundtrip(self):
        cfg = RunConfig.from_dict({"T": 0.5, "grid": {"n": 16}})
        again = RunConfig.from_dict(json.loads(cfg.resolved_json()))
        assert again == cfg
        assert cfg.sha256() == again.sha256()


class TestPersistence:
    def _tiny_cfg(self, tmp_path, save_every=5):
        return RunConfig.from_dict({
            "scenario": "deterministic-small",
            "grid": {"n": 16},
            "integrator": {"dt": 0.01, "save_every": save_every},
            "initial": {"amplitude": 0.4, "width": 3.0},
            "T": 0.1,
        })

    def test_csv_reproducible_modulo_timestamp(self, tmp_path):
        cfg = self._tiny_cfg(tmp_path)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run_scenario(cfg, outdir=str(d1))
        run_scenario(cfg, outdir=str(d2))
        h1 = csv_payload_hash(str(d1 / "diagnostics.csv"))
        h2 = csv_payload_hash(str(d2 / "diagnostics.csv"))
        assert h1 == h2
        raw1 = (d1 / "diagnostics.csv").read_bytes()
        raw2 = (d2 / "diagnostics.csv").read_bytes()
        stripped = [b"\n".join(x for x in raw.split(b"\n")
                               if not x.startswith(b"# generated_at"))
                    for raw in (raw1, raw2)]
        assert stripped[0] == stripped[1]

    def test_checkpoint_round_trip(self, tmp_path, grid16, rng):
        u, v = random_field(grid16, rng), random_field(grid16, rng)
        path = str(tmp_path / "ck.bin")
        write_checkpoint(path, grid16, Gauge.RANDOM, 0.25, u, v,
                         seed=9, stream=2, step_index=25, alpha=1.5)
        ck = read_checkpoint(path)
        assert ck["t"] == 0.25 and ck["seed"] == 9 and ck["stream"] == 2
        assert ck["step_index"] == 25 and ck["alpha"] == 1.5
        assert ck["gauge"] is Gauge.RANDOM
        assert np.array_equal(ck["u"].freq(), u.freq())
        assert np.array_equal(ck["v"].freq(), v.freq())

    def test_checkpoint_documented_offsets(self, tmp_path, grid16, rng):
        u, v = random_field(grid16, rng), random_field(grid16, rng)
        path = str(tmp_path / "ck.bin")
        write_checkpoint(path, grid16, Gauge.ITO, 0.5, u, v, 1, 0, 10)
        raw = open(path, "rb").read()
        assert raw[0:4] == b"ZKCK"
        assert int.from_bytes(raw[4:8], "little") == 1
        assert int.from_bytes(raw[8:12], "little") == grid16.n
        n3 = grid16.n**3
        u_bytes = raw[64:64 + 16 * n3]
        assert np.array_equal(
            np.frombuffer(u_bytes, dtype="<c16").reshape((grid16.n,) * 3),
            u.freq())

    def test_kill_and_resume_bit_exact(self, tmp_path):
        cfg = self._tiny_cfg(tmp_path)
        full_dir = tmp_path / "full"
        res = run_scenario(cfg, outdir=str(full_dir))
        final_full = res.trajectory.u[-1].freq()
        # resume from the mid-run checkpoint
        ck = sorted(os.listdir(full_dir / "checkpoints"))[0]
        res2 = run_scenario(cfg, outdir=str(tmp_path / "resumed"),
                            resume=str(full_dir / "checkpoints" / ck))
        final_res = res2.trajectory.u[-1].freq()
        assert np.array_equal(final_full, final_res)


class TestWilson:
    def test_interval_contains_point(self):
        for k, n in [(0, 50), (25, 50), (50, 50), (3, 7)]:
            lo, hi = wilson_interval(k, n)
            assert lo <= k / n <= hi
            assert 0.0 <= lo <= hi <= 1.0

    def test_extremes_shrink_with_n(self):
        lo1, hi1 = wilson_interval(10, 10)
        lo2, hi2 = wilson_interval(100, 100)
        assert lo2 > lo1


class TestMcMachinery:
    def _mc_cfg(self, n_traj=4):
        return RunConfig.from_dict({
            "scenario": "nonconservative",
            "grid": {"n": 16, "length": float(2 * np.pi)},
            "integrator": {"dt": 0.002, "save_every": 100,
                           "threshold_factor": 2.0},
            "noise": {"kind": "nonconservative"},
            "initial": {"amplitude": 1.0, "width": 0.8},
            "T": 0.5,
            "mc": {"im_phi_levels": [0.0, 20.0],
                   "trajectories_per_level": n_traj},
        })

    def test_levels_and_baseline(self, tmp_path):
        summary = mc_blowup(self._mc_cfg(), outdir=str(tmp_path))
        assert summary.baseline_ok
        assert summary.levels[0]["blow_up_fraction"] == 1.0
        assert summary.monotone
        assert (tmp_path / "mc_blowup.csv").exists()
        data = json.load(open(tmp_path / "mc_summary.json"))
        assert data["levels"][0]["blow_up_count"] == 4

    def test_worker_count_invariance(self):
        cfg = self._mc_cfg()
        s1 = mc_blowup(cfg, threads=1)
        s2 = mc_blowup(cfg, threads=2)
        assert s1.levels == s2.levels

    def test_requires_nonconservative(self):
        cfg = RunConfig.from_dict({"noise": {"kind": "gaussian"}})
        with pytest.raises(ConfigError):
            mc_blowup(cfg)


class TestCli:
    def test_config_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"scenario": "deterministic-small",
                                   "grid": {"n": 24}}))
        assert cli_main(["simulate", "--config", str(bad)]) == 2

    def test_invalid_json_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert cli_main(["simulate", "--config", str(bad)]) == 2

    def test_unknown_scenario_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"scenario": "nope"}))
        assert cli_main(["simulate", "--config", str(bad)]) == 2

    def test_empty_trajectory_count_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"mc": {"trajectories_per_level": 0}}))
        assert cli_main(["mc-blowup", "--config", str(bad)]) == 2

    def test_simulate_success_exit_0(self, tmp_path):
        cfgf = tmp_path / "c.json"
        cfgf.write_text(json.dumps({
            "scenario": "deterministic-small",
            "grid": {"n": 16},
            "integrator": {"dt": 0.01, "save_every": 5},
            "initial": {"amplitude": 0.4, "width": 3.0},
            "T": 0.05,
        }))
        assert cli_main(["simulate", "--config", str(cfgf),
                         "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "summary.json").exists()
        assert (tmp_path / "o" / "config.json").exists()

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STOZAK_OUT_ROOT", str(tmp_path))
        from stozak.harness import resolve_outdir
        out = resolve_outdir("", "sub/dir")
        assert out == str(tmp_path / "sub" / "dir")
        assert os.path.isdir(out)

    def test_ground_state_cli(self, tmp_path):
        assert cli_main(["ground-state", "--out", str(tmp_path),
                         "--mesh", "2e-3", "--r-max", "25"]) == 0
        assert (tmp_path / "ground_state.csv").exists()


class TestTrajectoryRecordInvariants:
    def test_times_increasing_blowup_bounded(self):
        cfg = RunConfig.from_dict({
            "scenario": "blowup-zakharov",
            "grid": {"n": 16, "length": float(2 * np.pi)},
            "integrator": {"dt": 2e-3, "save_every": 25,
                           "threshold_factor": 2.0},
            "initial": {"amplitude": 1.0, "width": 0.8},
            "T": 0.5,
        })
        res = run_scenario(cfg)
        times = res.trajectory.times
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
        assert res.trajectory.blow_up
        assert res.trajectory.blow_up_time <= 0.5

    def test_below_threshold_scenario_wiring(self):
        cfg = RunConfig.from_dict({
            "scenario": "below-threshold",
            "grid": {"n": 16},
            "integrator": {"dt": 5e-3, "save_every": 5},
            "initial": {"kind": "ground_state_fraction", "fraction": 0.5},
            "T": 0.05,
        })
        res = run_scenario(cfg)
        assert res.passed
        assert res.details["min_K"] > 0
