"""Unit tests for scenario generation, scan rendering and file formats."""

import math

import numpy as np
import pytest

from slam2d.ingest import OBS, SCAN, SPEED, parse_log, serialize_log
from slam2d.models import (
    ControlInput,
    LandmarkPosition,
    MotionNoiseConfig,
    Pose,
    SensorNoiseConfig,
)
from slam2d.perception import BEAM_COUNT, BEAM_STEP, segment_scan, extract_detections
from slam2d.simulator import (
    DynamicObject,
    ScenarioConfig,
    default_scenario,
    figure_eight_schedule,
    load_map,
    load_truth,
    parse_scenario,
    render_scan,
    save_log_files,
    save_map,
    save_scenario,
    save_truth,
    simulate,
)

LASER = SensorNoiseConfig(sigma_range=0.05, sigma_bearing=math.radians(0.2),
                          sensor_offset=math.pi / 2)


def quiet_scenario(**overrides):
    """A small, fully deterministic scenario for format/portability tests."""
    defaults = dict(
        duration=5.0,
        n_landmarks=5,
        motion_noise=None,
        sensor_noise=None,
        laser_noise=None,
    )
    defaults.update(overrides)
    return default_scenario(**defaults)


class TestScenarioConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ScenarioConfig(duration=0.0)
        with pytest.raises(ValueError):
            ScenarioConfig(scan_dt=0.25, dt=0.1)
        with pytest.raises(ValueError):
            ScenarioConfig(speed=31.0)
        with pytest.raises(ValueError):
            ScenarioConfig(schedule=[(10.0, 0.0, math.radians(61.0))])

    def test_figure_eight_alternates_turn_direction(self):
        segs = figure_eight_schedule(54.0, 18.0, 3.0, 0.35)
        assert len(segs) == 3
        assert [s[2] for s in segs] == [0.35, -0.35, 0.35]
        assert all(s[1] == 3.0 for s in segs)

    def test_control_at_walks_schedule_after_stationary_prelude(self):
        cfg = ScenarioConfig(
            duration=20.0,
            stationary_duration=2.0,
            schedule=[(3.0, 1.0, 0.0), (4.0, 2.0, 0.1)],
        )
        assert cfg.control_at(1.0) == ControlInput(0.0, 0.0)
        assert cfg.control_at(2.0) == ControlInput(1.0, 0.0)
        assert cfg.control_at(4.9) == ControlInput(1.0, 0.0)
        assert cfg.control_at(5.0) == ControlInput(2.0, 0.1)
        assert cfg.control_at(9.5) == ControlInput(0.0, 0.0)  # past schedule


class TestRenderScan:
    def test_empty_world_reads_max_range(self):
        scan = render_scan(Pose(0, 0, 0), [], 0.0, max_range=80.0)
        assert np.all(scan.ranges == 80.0)

    def test_dead_ahead_cluster(self):
        scan = render_scan(Pose(0, 0, 0), [LandmarkPosition(5.0, 0.0)], 0.0)
        hits = np.flatnonzero(scan.ranges < 80.0)
        assert list(hits) == [178, 179, 180, 181, 182]
        assert np.allclose(scan.ranges[hits], 5.0)

    def test_occlusion_keeps_nearer_object(self):
        near = LandmarkPosition(3.0, 0.0)
        far = LandmarkPosition(7.0, 0.0)
        scan = render_scan(Pose(0, 0, 0), [far, near], 0.0)
        assert scan.ranges[180] == 3.0

    def test_objects_behind_robot_invisible(self):
        scan = render_scan(Pose(0, 0, 0), [LandmarkPosition(-5.0, 0.0)], 0.0)
        assert np.all(scan.ranges == 80.0)

    def test_objects_beyond_max_range_invisible(self):
        scan = render_scan(Pose(0, 0, 0), [LandmarkPosition(90.0, 0.0)], 0.0)
        assert np.all(scan.ranges == 80.0)

    def test_cluster_clipped_at_field_of_view_edge(self):
        # Robot faces +y, so an object due +x sits on beam 0 (far right).
        target = LandmarkPosition(6.0, 0.0)
        scan = render_scan(Pose(0, 0, math.pi / 2), [target], 0.0)
        hits = np.flatnonzero(scan.ranges < 80.0)
        assert list(hits) == [0, 1, 2]

    def test_extraction_recovers_isolated_landmark(self):
        """render -> segment -> extract round trip, error bounded by beam
        quantization (half a beam of arc at the landmark's range)."""
        robot = Pose(1.0, -2.0, 0.7)
        for r, a in [(5.0, 0.8), (20.0, 1.4), (60.0, 2.0)]:
            target = LandmarkPosition(
                robot.x + r * math.cos(a), robot.y + r * math.sin(a)
            )
            scan = render_scan(robot, [target], 0.0)
            dets = extract_detections(segment_scan(scan), robot, LASER)
            assert len(dets) == 1
            _, pos = dets[0]
            err = math.hypot(pos.lx - target.lx, pos.ly - target.ly)
            assert err <= r * BEAM_STEP


class TestSimulate:
    def test_same_seed_reproduces_bytes(self):
        cfg = default_scenario(duration=5.0)
        t1, log1 = simulate(cfg, seed=42)
        t2, log2 = simulate(cfg, seed=42)
        assert serialize_log(log1) == serialize_log(log2)
        assert t1.poses == t2.poses
        assert t1.landmarks == t2.landmarks

    def test_different_seeds_differ(self):
        cfg = default_scenario(duration=5.0)
        _, log1 = simulate(cfg, seed=0)
        _, log2 = simulate(cfg, seed=1)
        assert serialize_log(log1) != serialize_log(log2)

    def test_noiseless_controls_equal_truth(self):
        cfg = quiet_scenario(schedule=[(5.0, 2.0, 0.1)])
        truth, log = simulate(cfg, seed=0)
        for rec in log.records:
            if rec.kind == SPEED and rec.timestamp >= cfg.stationary_duration:
                assert rec.payload == 2.0
        # and dead reckoning over the log reproduces the truth poses exactly
        from slam2d.ingest import dead_reckon

        rows = dead_reckon(cfg.start, log.records)
        by_t = dict(rows)
        for t, p in truth.poses:
            q = by_t[t]
            assert math.hypot(q.x - p.x, q.y - p.y) < 1e-9
            assert abs(q.theta - p.theta) < 1e-9

    def test_noise_calibration_within_five_percent(self):
        cfg = default_scenario(
            duration=1000.0,
            n_landmarks=0,
            emit_obs=False,
            emit_scans=False,
            schedule=[(1000.0, 3.0, 0.1)],
            motion_noise=MotionNoiseConfig(sigma_v=0.5, sigma_omega=math.radians(2)),
        )
        _, log = simulate(cfg, seed=7)
        v = np.array([r.payload for r in log.records if r.kind == SPEED])
        w = np.array([r.payload[2] for r in log.records if r.kind == "gyro"])
        assert len(v) >= 10_000
        assert abs(np.std(v - 3.0) / 0.5 - 1.0) < 0.05
        assert abs(np.std(w - 0.1) / math.radians(2) - 1.0) < 0.05

    def test_observation_records_are_range_gated_not_directional(self):
        # Identity-tagged observations act like beacons: the one behind the
        # robot still reports, the one beyond max_range does not.
        lms = {
            0: LandmarkPosition(0.0, 10.0),
            1: LandmarkPosition(0.0, -10.0),
            2: LandmarkPosition(0.0, 500.0),
        }
        cfg = quiet_scenario(
            landmarks=lms, n_landmarks=3, schedule=[(5.0, 0.0, 0.0)], emit_scans=False
        )
        _, log = simulate(cfg, seed=0)
        obs_ids = {r.payload[0] for r in log.records if r.kind == OBS}
        assert obs_ids == {0, 1}

    def test_dynamic_objects_render_into_scans_but_not_obs(self):
        mover = DynamicObject(0.0, 20.0, -1.0, 0.0)
        cfg = quiet_scenario(
            landmarks={}, n_landmarks=0, schedule=[(5.0, 0.0, 0.0)],
            dynamic_objects=(mover,),
        )
        _, log = simulate(cfg, seed=0)
        scans = [r.scan() for r in log.records if r.kind == SCAN]
        assert any(np.any(s.ranges < cfg.max_range) for s in scans)
        assert not any(r.kind == OBS for r in log.records)

    def test_biases_shift_logged_controls(self):
        cfg = quiet_scenario(
            schedule=[(5.0, 1.0, 0.0)], speed_bias=0.25, gyro_bias=0.01,
            emit_obs=False, emit_scans=False, n_landmarks=0, landmarks={},
        )
        _, log = simulate(cfg, seed=0)
        speeds = {r.payload for r in log.records if r.kind == SPEED}
        gyros = {r.payload[2] for r in log.records if r.kind == "gyro"}
        assert speeds == {1.25}
        assert gyros == {0.01}

    def test_landmark_field_respects_spacing_and_radius(self):
        cfg = default_scenario(duration=1.0, n_landmarks=20)
        truth, _ = simulate(cfg, seed=3)
        pts = list(truth.landmarks.values())
        assert len(pts) == 20
        for p in pts:
            assert math.hypot(p.lx, p.ly) <= cfg.map_radius
        for i, p in enumerate(pts):
            for q in pts[i + 1 :]:
                assert math.hypot(p.lx - q.lx, p.ly - q.ly) >= cfg.min_landmark_spacing


class TestFileFormats:
    def test_truth_roundtrip(self, tmp_path):
        truth, _ = simulate(quiet_scenario(), seed=1)
        path = tmp_path / "truth.txt"
        save_truth(truth, path)
        loaded = load_truth(path)
        assert loaded.landmarks == truth.landmarks
        assert loaded.poses == truth.poses

    def test_map_roundtrip_with_and_without_covariance(self, tmp_path):
        lms = {3: LandmarkPosition(1.5, -2.5), 7: LandmarkPosition(0.0, 4.0)}
        covs = {3: np.array([[0.1, 0.01], [0.01, 0.2]])}
        plain, with_cov = tmp_path / "plain.txt", tmp_path / "cov.txt"
        save_map(lms, plain)
        save_map(lms, with_cov, covariances=covs)
        assert load_map(plain).landmarks == lms
        assert load_map(with_cov).landmarks == lms
        assert len(with_cov.read_text().splitlines()[1].split()) == 8

    def test_save_log_files_writes_three_paths(self, tmp_path):
        truth, log = simulate(quiet_scenario(), seed=2)
        paths = save_log_files(log, truth, tmp_path)
        assert [p.name for p in paths] == ["log.txt", "truth.txt", "map.txt"]
        assert all(p.stat().st_size > 0 for p in paths)
        reparsed = parse_log(paths[0].read_text())
        assert serialize_log(reparsed) == serialize_log(log)

    def test_scenario_roundtrip(self, tmp_path):
        cfg = ScenarioConfig(
            duration=30.0,
            scan_dt=0.5,
            dt=0.1,
            stationary_duration=2.0,
            schedule=[(10.0, 2.0, 0.1), (20.0, 3.0, -0.2)],
            landmarks={0: LandmarkPosition(3.0, 4.0), 5: LandmarkPosition(-1.0, 2.0)},
            dynamic_objects=(DynamicObject(1.0, 2.0, 0.5, -0.5),),
            motion_noise=MotionNoiseConfig(sigma_v=0.3, sigma_omega=0.05),
            sensor_noise=None,
            laser_noise=SensorNoiseConfig(sigma_range=0.02, sigma_bearing=0.001),
            speed_bias=0.1,
            emit_obs=False,
        )
        path = tmp_path / "scenario.ini"
        save_scenario(cfg, path)
        got = parse_scenario(path)

        assert got.duration == cfg.duration
        assert got.scan_dt == cfg.scan_dt
        assert got.stationary_duration == cfg.stationary_duration
        assert got.landmarks == cfg.landmarks
        assert got.dynamic_objects == cfg.dynamic_objects
        assert got.sensor_noise is None
        assert got.emit_obs is False and got.emit_scans is True
        assert got.speed_bias == cfg.speed_bias
        assert got.motion_noise.sigma_v == cfg.motion_noise.sigma_v
        # Angles travel in degrees, so allow one degree->radian conversion ulp.
        assert got.motion_noise.sigma_omega == pytest.approx(
            cfg.motion_noise.sigma_omega, abs=1e-12
        )
        assert got.laser_noise.sigma_bearing == pytest.approx(
            cfg.laser_noise.sigma_bearing, abs=1e-12
        )
        for a, b in zip(got.schedule, cfg.schedule):
            assert a[0] == b[0] and a[1] == b[1]
            assert a[2] == pytest.approx(b[2], abs=1e-12)

    def test_scenario_requires_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[other]\nx = 1\n")
        with pytest.raises(ValueError):
            parse_scenario(path)
