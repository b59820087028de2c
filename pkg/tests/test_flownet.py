"""Detector-grid tests: retina layout, flow assembly, IMU ground truth, IO."""

import numpy as np
import pytest

from tdeflow.decode import DecodeConfig, DecodeMode
from tdeflow.events import BinnedEvents, DataError, bin_events
from tdeflow.flownet import (
    DEFAULT_BAND_SPACINGS,
    DIRECTION_STEPS,
    PX_PER_DEG,
    DetectorGrid,
    FlowField,
    ImuSample,
    build_retina,
    imu_ground_truth,
    load_flow_binary,
    load_imu,
    run_flow,
    save_flow_binary,
    save_flow_csv,
)
from tdeflow.simulator import SimulatorConfig, emit_events, gen_edge_stimulus
from tdeflow.tde import TdeKind, TdeParams

DECODE = DecodeConfig(mode=DecodeMode.COUNT, scale="wide", count_window=10)


def _edge_bins(width, height, step_per_px):
    """Hand-built pooled occupancy: column x lights up once at frame
    x*step_per_px (a rightward edge at 1/step_per_px px/bin)."""
    T = step_per_px * (width - 1) + 12
    data = np.zeros((T, height, width), dtype=np.uint8)
    for x in range(width):
        data[step_per_px * x, :, x] = 1
    return BinnedEvents(dt=0.01, data=data, pooled=True)


class TestDirectionSteps:
    def test_axes(self):
        assert DIRECTION_STEPS == {"L-R": (1, 0), "R-L": (-1, 0),
                                   "T-B": (0, 1), "B-T": (0, -1)}

    def test_px_per_deg(self):
        assert PX_PER_DEG == 4.25


class TestBuildRetina:
    def test_single_band_uniform(self):
        grid = build_retina(9, 7, band_spacings=[1])
        assert (grid.spacing_map == 1).all()

    def test_two_bands_split_at_half_radius(self):
        grid = build_retina(100, 100, band_spacings=[1, 2])
        cy, cx = 49.5, 49.5
        yy, xx = np.mgrid[0:100, 0:100]
        radius = np.hypot(xx - cx, yy - cy)
        inner = radius / radius.max() * 2 < 1
        np.testing.assert_array_equal(grid.spacing_map, np.where(inner, 1, 2))

    def test_default_bands_grow_with_radius(self):
        grid = build_retina(64, 64, band_spacings=DEFAULT_BAND_SPACINGS)
        row = grid.spacing_map[32, 32:]
        assert (np.diff(row) >= 0).all()
        assert grid.spacing_map[32, 32] == 1
        assert grid.spacing_map[0, 0] == 8

    def test_band_values_only(self):
        grid = build_retina(40, 30, band_spacings=DEFAULT_BAND_SPACINGS)
        assert set(np.unique(grid.spacing_map)) <= set(DEFAULT_BAND_SPACINGS)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_retina(10, 10, band_spacings=[])
        with pytest.raises(ValueError):
            build_retina(10, 10, band_spacings=[2, 2])
        with pytest.raises(ValueError):
            build_retina(10, 10, band_spacings=[3, 1])
        with pytest.raises(ValueError):
            build_retina(10, 10, band_spacings=[0, 1])

    def test_spacing_map_shape_enforced(self):
        with pytest.raises(ValueError):
            DetectorGrid(width=4, height=3, spacing_map=np.ones((4, 4), dtype=np.int64),
                         params=TdeParams(w_fac=5.0, p_g=3.0, p_i=3.0, p_v=3.0),
                         kind=TdeKind.TDE3)


class TestRunFlow:
    def test_all_zero_bins(self):
        binned = BinnedEvents(dt=0.01, data=np.zeros((20, 5, 7), dtype=np.uint8),
                              pooled=True)
        grid = build_retina(7, 5, band_spacings=[1])
        field, stats = run_flow(binned, grid, DECODE)
        assert not field.valid.any()
        assert (field.v == 0).all()
        assert stats["total_spikes"] == 0
        assert set(stats["per_direction"]) == set(DIRECTION_STEPS)

    def test_requires_pooled(self):
        binned = BinnedEvents(dt=0.01, data=np.zeros((5, 2, 3, 3), dtype=np.uint8),
                              pooled=False)
        grid = build_retina(3, 3, band_spacings=[1])
        with pytest.raises(ValueError):
            run_flow(binned, grid, DECODE)

    def test_size_mismatch(self):
        binned = BinnedEvents(dt=0.01, data=np.zeros((5, 4, 4), dtype=np.uint8),
                              pooled=True)
        grid = build_retina(5, 5, band_spacings=[1])
        with pytest.raises(ValueError):
            run_flow(binned, grid, DECODE)

    def test_rightward_edge_gives_positive_vx_zero_vy(self):
        binned = _edge_bins(13, 3, step_per_px=2)
        grid = build_retina(13, 3, band_spacings=[1])
        field, stats = run_flow(binned, grid, DECODE)
        assert field.valid.any()
        assert (field.v[..., 1] == 0).all()
        vx = field.v[..., 0]
        assert vx.max() > 0
        assert vx[field.valid].mean() > 0
        assert stats["per_direction"]["L-R"] > 0
        assert stats["per_direction"]["T-B"] == 0
        assert stats["per_direction"]["B-T"] == 0

    def test_simulated_edge_end_to_end(self):
        stim = gen_edge_stimulus(0.5, 1, 0.0, 11, 5, seed=4, tail=12)
        stream = emit_events(stim, SimulatorConfig())
        binned = bin_events(stream, 0.01, pool_polarity=True)
        grid = build_retina(11, 5, band_spacings=[1])
        field, _ = run_flow(binned, grid, DECODE)
        assert field.valid.any()
        assert (field.v[..., 1] == 0).all()
        assert field.v[field.valid, 0].mean() > 0

    def test_spacing_scales_estimates(self):
        # A spacing-2 detector on a 0.5 px/bin edge sees the same tap
        # timing as a spacing-1 detector on a 0.25 px/bin edge; its flow
        # values must come out exactly twice as large.
        wide = _edge_bins(13, 3, step_per_px=2)
        slow = _edge_bins(13, 3, step_per_px=4)
        grid2 = build_retina(13, 3, band_spacings=[2])
        grid1 = build_retina(13, 3, band_spacings=[1])
        f2, _ = run_flow(wide, grid2, DECODE)
        f1, _ = run_flow(slow, grid1, DECODE)
        cols = slice(2, 11)  # enabled under both spacings
        a = f2.v[:, 1, cols, 0].max(axis=0)
        b = f1.v[:, 1, cols, 0].max(axis=0)
        assert (a > 0).all()
        np.testing.assert_array_equal(a, 2.0 * b)

    def test_mirror_antisymmetry(self):
        binned = _edge_bins(13, 3, step_per_px=3)
        mirrored = BinnedEvents(dt=binned.dt, data=binned.data[:, :, ::-1].copy(),
                                pooled=True)
        grid = build_retina(13, 3, band_spacings=[1])
        fwd, _ = run_flow(binned, grid, DECODE)
        rev, _ = run_flow(mirrored, grid, DECODE)
        np.testing.assert_array_equal(rev.valid, fwd.valid[:, :, ::-1])
        np.testing.assert_array_equal(rev.v[..., 0], -fwd.v[:, :, ::-1, 0])
        np.testing.assert_array_equal(rev.v[..., 1], fwd.v[:, :, ::-1, 1])

    def test_tde3_never_outspikes_tde2(self):
        rng = np.random.default_rng(17)
        params = TdeParams.from_time_constants(5.0, 5.0, 5.0, 5.0)
        for _ in range(8):
            data = (rng.random((30, 5, 9)) < 0.2).astype(np.uint8)
            binned = BinnedEvents(dt=0.01, data=data, pooled=True)
            g3 = build_retina(9, 5, band_spacings=[1], params=params, kind=TdeKind.TDE3)
            g2 = build_retina(9, 5, band_spacings=[1], params=params, kind=TdeKind.TDE2)
            _, s3 = run_flow(binned, g3, DECODE)
            _, s2 = run_flow(binned, g2, DECODE)
            assert s3["total_spikes"] <= s2["total_spikes"]


class TestFlowField:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            FlowField(v=np.zeros((2, 3, 4)), valid=np.zeros((2, 3, 4), dtype=bool), dt=0.01)
        with pytest.raises(ValueError):
            FlowField(v=np.zeros((2, 3, 4, 2)), valid=np.zeros((2, 3, 3), dtype=bool), dt=0.01)

    def test_binary_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        v = (rng.integers(-8, 8, size=(3, 4, 5, 2)) / 2.0)
        valid = rng.random((3, 4, 5)) < 0.5
        field = FlowField(v=v, valid=valid, dt=0.05)
        path = tmp_path / "flow.bin"
        save_flow_binary(field, path)
        loaded = load_flow_binary(path)
        np.testing.assert_array_equal(loaded.v, v)
        np.testing.assert_array_equal(loaded.valid, valid)
        assert loaded.dt == 0.05

    def test_binary_truncation_detected(self, tmp_path):
        field = FlowField(v=np.zeros((2, 3, 3, 2)), valid=np.ones((2, 3, 3), dtype=bool),
                          dt=0.01)
        path = tmp_path / "flow.bin"
        save_flow_binary(field, path)
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(DataError):
            load_flow_binary(path)

    def test_csv_lists_valid_cells(self, tmp_path):
        v = np.zeros((1, 2, 2, 2))
        v[0, 1, 0] = (2.5, -1.0)
        valid = np.zeros((1, 2, 2), dtype=bool)
        valid[0, 1, 0] = True
        path = tmp_path / "flow.csv"
        save_flow_csv(FlowField(v=v, valid=valid, dt=0.01), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin,x,y,vx,vy"
        assert lines[1:] == ["0,0,1,2.5,-1.0"]


class TestImuGroundTruth:
    def test_zero_rates_zero_flow(self):
        samples = [ImuSample(t=0.01 * i, x=0.0, y=0.0, z=0.0) for i in range(10)]
        field = imu_ground_truth(samples, 8, 6, dt=0.05, e0=(3.5, 2.5))
        assert field.v.shape == (1, 6, 8, 2)
        assert np.abs(field.v).max() == 0.0
        assert field.valid.all()

    def test_yaw_translates_horizontally(self):
        # 1 deg/s of yaw for a 0.05 s bin moves every pixel by
        # 4.25 * 0.05 = 0.2125 px, i.e. 4.25 px/s of horizontal flow.
        samples = [ImuSample(t=0.01 * i, x=0.0, y=1.0, z=0.0) for i in range(5)]
        field = imu_ground_truth(samples, 6, 4, dt=0.05, e0=(2.5, 1.5))
        np.testing.assert_allclose(field.v[..., 0], 4.25, rtol=1e-12)
        np.testing.assert_allclose(field.v[..., 1], 0.0, atol=1e-12)

    def test_pitch_translates_vertically(self):
        samples = [ImuSample(t=0.0, x=2.0, y=0.0, z=0.0)]
        field = imu_ground_truth(samples, 4, 4, dt=0.05, e0=(1.5, 1.5), n_bins=1)
        np.testing.assert_allclose(field.v[..., 1], 2.0 * PX_PER_DEG, rtol=1e-12)
        np.testing.assert_allclose(field.v[..., 0], 0.0, atol=1e-12)

    def test_pure_roll_is_tangential(self):
        z = 10.0  # deg/s
        samples = [ImuSample(t=0.0, x=0.0, y=0.0, z=z)]
        field = imu_ground_truth(samples, 21, 21, dt=0.01, e0=(10.0, 10.0), n_bins=1)
        r = 7.0
        vx, vy = field.v[0, 10, 10 + int(r)]
        expected_speed = r * np.deg2rad(z)
        assert vy == pytest.approx(expected_speed, rel=1e-3)
        assert abs(vx) < expected_speed * 1e-2
        center = field.v[0, 10, 10]
        assert np.hypot(*center) < 1e-9

    def test_missing_coverage_rejected(self):
        samples = [ImuSample(t=0.0, x=0.0, y=0.0, z=0.0)]
        with pytest.raises(DataError):
            imu_ground_truth(samples, 4, 4, dt=0.05, e0=(1.5, 1.5), n_bins=3)

    def test_no_samples_rejected(self):
        with pytest.raises(DataError):
            imu_ground_truth([], 4, 4, dt=0.05, e0=(1.5, 1.5))

    def test_bad_dt_rejected(self):
        with pytest.raises(ValueError):
            imu_ground_truth([ImuSample(t=0.0, x=0.0, y=0.0, z=0.0)], 4, 4,
                             dt=0.0, e0=(1.5, 1.5))


class TestLoadImu:
    def test_basic(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text("# header comment\n"
                        "0.0 1.0 2.0 3.0\n"
                        "\n"
                        "0.1 -1.0 0.5 0.0\n")
        samples = load_imu(path)
        assert samples == [ImuSample(t=0.0, x=1.0, y=2.0, z=3.0),
                           ImuSample(t=0.1, x=-1.0, y=0.5, z=0.0)]

    def test_column_mapping(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text("9 9 0.5 1.0 2.0 3.0\n")
        samples = load_imu(path, columns=(2, 3, 4, 5))
        assert samples[0] == ImuSample(t=0.5, x=1.0, y=2.0, z=3.0)

    def test_radians_converted(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text(f"0.0 {np.pi!r} 0.0 0.0\n")
        samples = load_imu(path, units="rad")
        assert samples[0].x == pytest.approx(180.0)

    def test_bad_units(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text("0 0 0 0\n")
        with pytest.raises(ValueError):
            load_imu(path, units="furlongs")

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text("0.0 1.0\n")
        with pytest.raises(DataError):
            load_imu(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "imu.txt"
        path.write_text("0.0 nan 0.0 0.0\n")
        with pytest.raises(DataError):
            load_imu(path)
