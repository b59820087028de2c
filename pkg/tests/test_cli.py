"""End-to-end checks of the command-line pipelines and exit codes."""

import os

import numpy as np
import pytest
from PIL import Image

from tdeflow.cli import main, render_flow_png
from tdeflow.decode import DecodeConfig, DecodeMode
from tdeflow.events import bin_events, load_events
from tdeflow.flownet import FlowField, build_retina, load_flow_binary, run_flow
from tdeflow.stcf import StcfConfig, stcf_filter
from tdeflow.tde import TdeKind, TdeParams
from tdeflow.train import load_params, save_params


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _write_params(path, n_required=0, kind=TdeKind.TDE3):
    params = TdeParams.from_time_constants(8.0, 5.0, 5.0, 5.0)
    save_params(path, params, StcfConfig(n_required=n_required, window=1),
                trace_tau=5.0, kind=kind)
    return params


SIM_ARGS = ["simulate", "--velocity", "0.5", "--width", "11", "--height", "5",
            "--seed", "3"]


# --------------------------------------------------------------------------
# Exit codes

class TestExitCodes:
    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert main(["simulate", "--bogus", "--out-dir", str(tmp_path)]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

    def test_missing_params_file_is_data_error(self, tmp_path):
        ev = tmp_path / "events.txt"
        ev.write_text("")
        code = main(["flow", "--events", str(ev), "--params",
                     str(tmp_path / "nope.txt"), "--width", "4", "--height", "4",
                     "--out-dir", str(tmp_path)])
        assert code == 2

    def test_malformed_events_is_data_error(self, tmp_path):
        ev = tmp_path / "events.txt"
        ev.write_text("0.0 1 2\n")
        pf = tmp_path / "params.txt"
        _write_params(pf)
        code = main(["flow", "--events", str(ev), "--params", str(pf),
                     "--width", "4", "--height", "4", "--out-dir", str(tmp_path)])
        assert code == 2

    def test_missing_config_file_is_data_error(self, tmp_path):
        code = main(["--config", str(tmp_path / "absent.cfg"), *SIM_ARGS,
                     "--out-dir", str(tmp_path)])
        assert code == 2

    def test_malformed_config_line_is_data_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("velocity 0.5\n")
        code = main(["--config", str(cfg), *SIM_ARGS, "--out-dir", str(tmp_path)])
        assert code == 2

    def test_bad_value_is_usage_error(self, tmp_path):
        ev = tmp_path / "events.txt"
        ev.write_text("")
        pf = tmp_path / "params.txt"
        _write_params(pf)
        assert main(["flow", "--events", str(ev), "--params", str(pf),
                     "--width", "4", "--height", "4", "--out-dir", str(tmp_path)]) == 0
        assert main(["render", "--flow", str(tmp_path / "flow.bin"), "--bin", "0",
                     "--vmax", "-1.0", "--out-dir", str(tmp_path)]) == 1


# --------------------------------------------------------------------------
# Output directory resolution

class TestOutDir:
    def test_env_var_supplies_default(self, tmp_path, monkeypatch):
        d = tmp_path / "from_env"
        monkeypatch.setenv("TDEFLOW_OUT", str(d))
        assert main(SIM_ARGS) == 0
        assert (d / "events.txt").exists()

    def test_flag_overrides_env(self, tmp_path, monkeypatch):
        env_d = tmp_path / "env"
        flag_d = tmp_path / "flag"
        monkeypatch.setenv("TDEFLOW_OUT", str(env_d))
        assert main([*SIM_ARGS, "--out-dir", str(flag_d)]) == 0
        assert (flag_d / "events.txt").exists()
        assert not env_d.exists()


# --------------------------------------------------------------------------
# simulate

class TestSimulateCli:
    def test_writes_parseable_events_and_truth(self, tmp_path):
        assert main([*SIM_ARGS, "--out-dir", str(tmp_path)]) == 0
        stream = load_events(tmp_path / "events.txt", 11, 5)
        assert len(stream) > 0
        lines = (tmp_path / "truth.csv").read_text().splitlines()
        assert lines[0] == "timestep,velocity"
        assert len(lines) > 1
        values = {float(row.split(",")[1]) for row in lines[1:]}
        assert values <= {0.0, 0.5}
        assert 0.5 in values

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main([*SIM_ARGS, "--out-dir", str(a)]) == 0
        assert main([*SIM_ARGS, "--out-dir", str(b)]) == 0
        assert _read(a / "events.txt") == _read(b / "events.txt")
        assert _read(a / "truth.csv") == _read(b / "truth.csv")

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--stimulus", "texture", "--seed", "1",
                     "--out-dir", str(a)]) == 0
        assert main(["simulate", "--stimulus", "texture", "--seed", "2",
                     "--out-dir", str(b)]) == 0
        assert _read(a / "events.txt") != _read(b / "events.txt")

    def test_config_file_matches_explicit_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# stimulus defaults\nvelocity = 0.5\nseed = 3\n"
                       "width = 11\nheight = 5\n\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["--config", str(cfg), "simulate", "--out-dir", str(a)]) == 0
        assert main([*SIM_ARGS, "--out-dir", str(b)]) == 0
        assert _read(a / "events.txt") == _read(b / "events.txt")

    def test_explicit_flag_beats_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 1\n")
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--stimulus", "texture", "--out-dir"]
        assert main(["--config", str(cfg), *args, str(a), "--seed", "2"]) == 0
        assert main([*args, str(b), "--seed", "2"]) == 0
        assert _read(a / "events.txt") == _read(b / "events.txt")

    def test_dashed_config_key_maps_to_flag(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("noise-rate = 200.0\nseed = 3\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["--config", str(cfg), *SIM_ARGS, "--out-dir", str(a)]) == 0
        assert main([*SIM_ARGS, "--out-dir", str(b)]) == 0
        assert _read(a / "events.txt") != _read(b / "events.txt")


# --------------------------------------------------------------------------
# train

class TestTrainCli:
    ARGS = ["train", "--task", "wide", "--epochs", "2", "--batch-size", "6",
            "--seed", "0"]

    def test_writes_params_and_history(self, tmp_path):
        assert main([*self.ARGS, "--out-dir", str(tmp_path)]) == 0
        params, stcf_cfg, extras = load_params(tmp_path / "params.txt")
        assert params.w_fac > 0
        assert extras["kind"] is TdeKind.TDE3
        lines = (tmp_path / "history.csv").read_text().splitlines()
        assert lines[0] == "epoch,loss,pearson_r,mean_spikes,fta,degenerate"
        assert len(lines) >= 3

    def test_deterministic_given_seed(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main([*self.ARGS, "--out-dir", str(a)]) == 0
        assert main([*self.ARGS, "--out-dir", str(b)]) == 0
        assert _read(a / "params.txt") == _read(b / "params.txt")
        assert _read(a / "history.csv") == _read(b / "history.csv")

    def test_tde2_kind_round_trips(self, tmp_path):
        assert main([*self.ARGS, "--kind", "tde2", "--out-dir", str(tmp_path)]) == 0
        _, _, extras = load_params(tmp_path / "params.txt")
        assert extras["kind"] is TdeKind.TDE2


# --------------------------------------------------------------------------
# flow

class TestFlowCli:
    def _flow_args(self, tmp_path, **over):
        base = dict(events=str(tmp_path / "events.txt"),
                    params=str(tmp_path / "params.txt"),
                    width="11", height="5", dt="0.01", spacings="1,2",
                    mode="count", count_window="10", out_dir=str(tmp_path))
        base.update(over)
        argv = ["flow"]
        for key, val in base.items():
            argv += [f"--{key.replace('_', '-')}", val]
        return argv

    def test_outputs_match_in_process_pipeline(self, tmp_path):
        assert main([*SIM_ARGS, "--out-dir", str(tmp_path)]) == 0
        params = _write_params(tmp_path / "params.txt", n_required=2)
        assert main(self._flow_args(tmp_path)) == 0

        stream = load_events(tmp_path / "events.txt", 11, 5)
        binned = stcf_filter(bin_events(stream, 0.01, pool_polarity=True),
                             StcfConfig(n_required=2, window=1))
        grid = build_retina(11, 5, (1, 2), params=params, kind=TdeKind.TDE3)
        cfg = DecodeConfig(mode=DecodeMode.COUNT, count_window=10, scale="wide",
                           trace_tau=5.0)
        field, stats = run_flow(binned, grid, cfg)

        loaded = load_flow_binary(tmp_path / "flow.bin")
        np.testing.assert_array_equal(loaded.v, field.v.astype(np.float32))
        np.testing.assert_array_equal(loaded.valid, field.valid)
        text = (tmp_path / "metrics.txt").read_text()
        assert f"total_spikes = {stats['total_spikes']}" in text
        assert stats["total_spikes"] > 0

    def test_empty_events_give_zero_flow(self, tmp_path):
        (tmp_path / "events.txt").write_text("")
        _write_params(tmp_path / "params.txt")
        assert main(self._flow_args(tmp_path)) == 0
        field = load_flow_binary(tmp_path / "flow.bin")
        assert not field.valid.any()
        assert np.all(field.v == 0.0)
        text = (tmp_path / "metrics.txt").read_text()
        assert "total_spikes = 0" in text
        assert "missing" in text

    def test_imu_reference_metrics_written(self, tmp_path):
        assert main([*SIM_ARGS, "--out-dir", str(tmp_path)]) == 0
        _write_params(tmp_path / "params.txt")
        rows = "".join(f"{t * 0.01} 0.0 0.0 1.0\n" for t in range(300))
        (tmp_path / "imu.txt").write_text(rows)
        argv = self._flow_args(tmp_path) + ["--imu", str(tmp_path / "imu.txt"),
                                            "--imu-center", "5,2"]
        assert main(argv) == 0
        text = (tmp_path / "metrics.txt").read_text()
        assert "mean_aee = " in text
        assert "mean_aae_deg = " in text

    def test_flow_deterministic(self, tmp_path):
        assert main([*SIM_ARGS, "--out-dir", str(tmp_path)]) == 0
        _write_params(tmp_path / "params.txt")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(self._flow_args(tmp_path, out_dir=str(a))) == 0
        assert main(self._flow_args(tmp_path, out_dir=str(b))) == 0
        for name in ("flow.bin", "flow.csv", "metrics.txt"):
            assert _read(a / name) == _read(b / name)


# --------------------------------------------------------------------------
# render

def _save_field(tmp_path, v):
    from tdeflow.flownet import save_flow_binary
    field = FlowField(v=v, valid=np.ones(v.shape[:3], dtype=bool), dt=0.05)
    path = tmp_path / "flow.bin"
    save_flow_binary(field, path)
    return path, field


class TestRenderPng:
    def _pixels(self, path):
        return np.asarray(Image.open(path).convert("RGB"))

    def test_zero_flow_renders_black(self, tmp_path):
        field = FlowField(v=np.zeros((1, 4, 6, 2)), valid=np.zeros((1, 4, 6), bool),
                          dt=0.05)
        out = tmp_path / "zero.png"
        render_flow_png(field, 0, 1.0, out)
        assert np.all(self._pixels(out) == 0)

    def test_rightward_at_vmax_is_pure_red(self, tmp_path):
        v = np.zeros((1, 4, 6, 2))
        v[..., 0] = 2.0
        field = FlowField(v=v, valid=np.ones((1, 4, 6), bool), dt=0.05)
        out = tmp_path / "right.png"
        render_flow_png(field, 0, 2.0, out)
        px = self._pixels(out)
        assert np.all(px[:, :, 0] == 255)
        assert np.all(px[:, :, 1] == 0)
        assert np.all(px[:, :, 2] == 0)

    def test_direction_maps_to_hue(self, tmp_path):
        v = np.zeros((1, 2, 2, 2))
        v[..., 1] = 1.0
        field = FlowField(v=v, valid=np.ones((1, 2, 2), bool), dt=0.05)
        out = tmp_path / "up.png"
        render_flow_png(field, 0, 1.0, out)
        hsv = np.asarray(Image.open(out).convert("RGB").convert("HSV"))
        assert np.all(np.abs(hsv[:, :, 0].astype(int) - 64) <= 2)
        assert np.all(hsv[:, :, 2] == 255)

    def test_magnitude_clamps_at_vmax(self, tmp_path):
        v = np.zeros((1, 1, 2, 2))
        v[0, 0, 0, 0] = 1.0
        v[0, 0, 1, 0] = 10.0
        field = FlowField(v=v, valid=np.ones((1, 1, 2), bool), dt=0.05)
        out = tmp_path / "clamp.png"
        render_flow_png(field, 0, 1.0, out)
        px = self._pixels(out)
        np.testing.assert_array_equal(px[0, 0], px[0, 1])

    def test_half_magnitude_half_brightness(self, tmp_path):
        v = np.zeros((1, 1, 1, 2))
        v[..., 0] = 0.5
        field = FlowField(v=v, valid=np.ones((1, 1, 1), bool), dt=0.05)
        out = tmp_path / "half.png"
        render_flow_png(field, 0, 1.0, out)
        hsv = np.asarray(Image.open(out).convert("RGB").convert("HSV"))
        assert abs(int(hsv[0, 0, 2]) - 127) <= 1

    def test_bin_out_of_range_rejected(self, tmp_path):
        field = FlowField(v=np.zeros((2, 1, 1, 2)), valid=np.zeros((2, 1, 1), bool),
                          dt=0.05)
        with pytest.raises(ValueError):
            render_flow_png(field, 2, 1.0, tmp_path / "x.png")
        with pytest.raises(ValueError):
            render_flow_png(field, -1, 1.0, tmp_path / "x.png")

    def test_vmax_must_be_positive(self, tmp_path):
        field = FlowField(v=np.zeros((1, 1, 1, 2)), valid=np.zeros((1, 1, 1), bool),
                          dt=0.05)
        with pytest.raises(ValueError):
            render_flow_png(field, 0, 0.0, tmp_path / "x.png")

    def test_render_cli_byte_identical(self, tmp_path):
        rng = np.random.default_rng(7)
        path, _ = _save_field(tmp_path, rng.normal(size=(2, 3, 4, 2)))
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["render", "--flow", str(path), "--bin", "1", "--vmax", "2.0"]
        assert main([*argv, "--out-dir", str(a)]) == 0
        assert main([*argv, "--out-dir", str(b)]) == 0
        assert _read(a / "flow_bin0001.png") == _read(b / "flow_bin0001.png")


# --------------------------------------------------------------------------
# dsi

class TestDsiCli:
    def test_writes_per_round_rows(self, tmp_path):
        assert main(["dsi", "--rounds", "1", "--stimuli", "2", "--seed", "0",
                     "--out-dir", str(tmp_path)]) == 0
        lines = (tmp_path / "dsi.csv").read_text().splitlines()
        assert lines[0] == "round,kind,dsi"
        assert len(lines) == 3
        kinds = set()
        for row in lines[1:]:
            rnd, kind, val = row.split(",")
            assert rnd == "0"
            kinds.add(kind)
            if val != "nan":
                assert 0.0 <= float(val) <= 1.0
        assert kinds == {"tde2", "tde3"}
