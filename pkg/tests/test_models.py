"""Unit tests for the motion/observation models and their Jacobians."""

import math

import numpy as np
import pytest

import oracles
from slam2d.models import (
    ControlInput,
    DegenerateGeometryError,
    LandmarkPosition,
    MotionNoiseConfig,
    Observation,
    Pose,
    SensorNoiseConfig,
    inverse_observation_jacobians,
    inverse_observe,
    motion_jacobians,
    motion_step,
    observation_jacobians,
    observe,
    process_noise,
    wrap_angle,
)

NO_OFFSET = SensorNoiseConfig(sensor_offset=0.0)
LASER = SensorNoiseConfig(sensor_offset=math.pi / 2)


def random_geometry(rng):
    """A pose and a landmark at range in [0.1, 80], any direction."""
    p = Pose(
        rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-math.pi, math.pi)
    )
    r = rng.uniform(0.1, 80.0)
    a = rng.uniform(-math.pi, math.pi)
    L = LandmarkPosition(p.x + r * math.cos(a), p.y + r * math.sin(a))
    return p, L


class TestWrapAngle:
    def test_identity_at_zero(self):
        assert wrap_angle(0.0) == 0.0

    def test_three_pi(self):
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi, abs=1e-12)

    def test_negative_three_half_pi(self):
        assert wrap_angle(-1.5 * math.pi) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_interval_is_half_open(self):
        # pi stays pi; -pi maps to the positive end.
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi

    def test_congruence_and_idempotence(self):
        rng = np.random.default_rng(7)
        for a in rng.uniform(-50, 50, size=200):
            w = wrap_angle(a)
            assert -math.pi < w <= math.pi
            assert math.isclose(
                math.remainder(w - a, 2 * math.pi), 0.0, abs_tol=1e-9
            )
            assert wrap_angle(w) == pytest.approx(w, abs=1e-15)

    def test_array_input(self):
        out = wrap_angle(np.array([0.0, 3 * math.pi, -1.5 * math.pi]))
        assert np.allclose(out, [0.0, math.pi, math.pi / 2])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            wrap_angle(math.nan)
        with pytest.raises(ValueError):
            wrap_angle(math.inf)


class TestTypes:
    def test_pose_wraps_heading(self):
        assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)

    def test_pose_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose(math.nan, 0, 0)

    def test_observation_wraps_bearing_and_rejects_negative_range(self):
        assert Observation(1.0, 3 * math.pi).bearing == pytest.approx(math.pi)
        with pytest.raises(ValueError):
            Observation(-0.5, 0.0)

    def test_noise_configs_require_positive_sigmas(self):
        with pytest.raises(ValueError):
            MotionNoiseConfig(sigma_v=0.0)
        with pytest.raises(ValueError):
            SensorNoiseConfig(sigma_bearing=-1.0)

    def test_sensor_covariance_diagonal(self):
        cfg = SensorNoiseConfig(sigma_range=0.2, sigma_bearing=0.1)
        assert np.allclose(cfg.covariance(), np.diag([0.04, 0.01]))


class TestMotionStep:
    def test_straight_line(self):
        p = motion_step(Pose(0, 0, 0), ControlInput(1, 0), 1.0)
        assert (p.x, p.y, p.theta) == pytest.approx((1.0, 0.0, 0.0))

    def test_heading_aligned_translation(self):
        p = motion_step(Pose(0, 0, math.pi / 2), ControlInput(2, 0), 0.5)
        assert (p.x, p.y, p.theta) == pytest.approx((0.0, 1.0, math.pi / 2))

    def test_pure_rotation(self):
        p = motion_step(Pose(1, 1, 0), ControlInput(0, math.pi / 2), 1.0)
        assert (p.x, p.y, p.theta) == pytest.approx((1.0, 1.0, math.pi / 2))

    def test_zero_control_is_identity(self):
        for T in (0.01, 1.0, 37.5):
            p = motion_step(Pose(2, -3, 1.1), ControlInput(0, 0), T)
            assert (p.x, p.y, p.theta) == (2.0, -3.0, 1.1)

    def test_heading_always_wrapped(self):
        p = motion_step(Pose(0, 0, 3.0), ControlInput(0, 1.0), 1.0)
        assert -math.pi < p.theta <= math.pi

    def test_non_positive_step_rejected(self):
        with pytest.raises(ValueError):
            motion_step(Pose(0, 0, 0), ControlInput(1, 0), 0.0)
        with pytest.raises(ValueError):
            motion_step(Pose(0, 0, 0), ControlInput(1, 0), -0.1)


class TestMotionJacobians:
    def test_axis_aligned_values(self):
        Fx, Fu = motion_jacobians(Pose(0, 0, 0), ControlInput(1, 0), 1.0)
        assert np.allclose(Fx, [[1, 0, 0], [0, 1, 1], [0, 0, 1]])
        assert np.allclose(Fu, [[1, 0], [0, 0], [0, 1]])

    def test_quarter_turn_heading(self):
        Fx, _ = motion_jacobians(Pose(0, 0, math.pi / 2), ControlInput(3, 0), 0.1)
        assert Fx[0, 2] == pytest.approx(-0.3)
        assert Fx[1, 2] == pytest.approx(0.0, abs=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p, _ = random_geometry(rng)
            u = ControlInput(rng.uniform(-5, 5), rng.uniform(-1, 1))
            T = rng.uniform(0.01, 1.0)
            Fx, Fu = motion_jacobians(p, u, T)

            def step_pose(x):
                return oracles.motion_f(x, u.v, u.omega, T)

            def step_control(c):
                return oracles.motion_f(p.as_array(), c[0], c[1], T)

            fd_Fx = oracles.finite_difference(step_pose, p.as_array(), angle_rows=(2,))
            fd_Fu = oracles.finite_difference(
                step_control, np.array([u.v, u.omega]), angle_rows=(2,)
            )
            assert oracles.relative_matrix_error(fd_Fx, Fx) < 1e-5
            assert oracles.relative_matrix_error(fd_Fu, Fu) < 1e-5


class TestProcessNoise:
    def test_zero_jacobian_annihilates(self):
        assert np.array_equal(
            process_noise(np.zeros((3, 2)), MotionNoiseConfig()), np.zeros((3, 3))
        )

    def test_diagonal_propagation(self):
        Fu = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        cfg = MotionNoiseConfig(sigma_v=0.5, sigma_omega=0.1)
        assert np.allclose(process_noise(Fu, cfg), np.diag([0.25, 0.0, 0.01]))

    def test_symmetric_psd_for_random_jacobians(self):
        rng = np.random.default_rng(3)
        cfg = MotionNoiseConfig(sigma_v=0.5, sigma_omega=0.2)
        for _ in range(100):
            Q = process_noise(rng.normal(size=(3, 2)), cfg)
            assert np.max(np.abs(Q - Q.T)) == 0.0
            assert np.min(np.linalg.eigvalsh(Q)) >= -1e-12

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            process_noise(np.zeros((2, 2)), MotionNoiseConfig())


class TestObserve:
    def test_landmark_dead_ahead(self):
        z = observe(Pose(0, 0, 0), LandmarkPosition(1, 0), NO_OFFSET)
        assert (z.range, z.bearing) == pytest.approx((1.0, 0.0))

    def test_rotated_frame(self):
        z = observe(Pose(0, 0, math.pi / 2), LandmarkPosition(0, 2), NO_OFFSET)
        assert (z.range, z.bearing) == pytest.approx((2.0, 0.0))

    def test_polar_construction_with_offset(self):
        L = LandmarkPosition(1 + 3 * math.cos(0.4), 1 + 3 * math.sin(0.4))
        z = observe(Pose(1, 1, 0), L, LASER)
        assert z.range == pytest.approx(3.0)
        assert z.bearing == pytest.approx(wrap_angle(0.4 + math.pi / 2))

    def test_bearing_always_wrapped(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            p, L = random_geometry(rng)
            z = observe(p, L, LASER)
            assert -math.pi < z.bearing <= math.pi

    def test_coincident_landmark_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            observe(Pose(1, 2, 0), LandmarkPosition(1, 2), NO_OFFSET)


class TestObservationJacobians:
    def test_axis_aligned_values(self):
        Hx, _ = observation_jacobians(Pose(0, 0, 0), LandmarkPosition(2, 0))
        assert np.allclose(Hx[0], [-1.0, 0.0, 0.0])
        assert np.allclose(Hx[1], [0.0, -0.5, -1.0])

    def test_landmark_block_is_negated_pose_block(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            p, L = random_geometry(rng)
            Hx, Hl = observation_jacobians(p, L)
            assert np.array_equal(Hl, -Hx[:, 0:2])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            p, L = random_geometry(rng)
            Hx, Hl = observation_jacobians(p, L)

            def obs_pose(x):
                return oracles.observe_f(x, L.as_array(), 0.0)

            def obs_landmark(l):
                return oracles.observe_f(p.as_array(), l, 0.0)

            fd_Hx = oracles.finite_difference(obs_pose, p.as_array(), angle_rows=(1,))
            fd_Hl = oracles.finite_difference(obs_landmark, L.as_array(), angle_rows=(1,))
            assert oracles.relative_matrix_error(fd_Hx, Hx) < 1e-5
            assert oracles.relative_matrix_error(fd_Hl, Hl) < 1e-5

    def test_degenerate_geometry_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            observation_jacobians(Pose(0, 0, 0), LandmarkPosition(0, 0))


class TestInverseObserve:
    def test_dead_ahead_placement(self):
        L = inverse_observe(Pose(0, 0, 0), Observation(1, 0), NO_OFFSET)
        assert (L.lx, L.ly) == pytest.approx((1.0, 0.0))

    def test_left_of_robot_placement(self):
        L = inverse_observe(Pose(0, 0, 0), Observation(2, math.pi / 2), NO_OFFSET)
        assert (L.lx, L.ly) == pytest.approx((0.0, 2.0), abs=1e-12)

    def test_roundtrip_both_directions(self):
        rng = np.random.default_rng(19)
        for cfg in (NO_OFFSET, LASER):
            for _ in range(100):
                p, L = random_geometry(rng)
                z = observe(p, L, cfg)
                L2 = inverse_observe(p, z, cfg)
                assert math.hypot(L2.lx - L.lx, L2.ly - L.ly) < 1e-9

                z0 = Observation(rng.uniform(0.1, 80), rng.uniform(-math.pi, math.pi))
                z1 = observe(p, inverse_observe(p, z0, cfg), cfg)
                assert abs(z1.range - z0.range) < 1e-9
                assert abs(wrap_angle(z1.bearing - z0.bearing)) < 1e-9

    def test_zero_range_rejected(self):
        with pytest.raises(ValueError):
            inverse_observe(Pose(0, 0, 0), Observation(0.0, 0.3), NO_OFFSET)


class TestInverseObservationJacobians:
    def test_unit_geometry_values(self):
        Gx, Gz = inverse_observation_jacobians(Pose(0, 0, 0), Observation(1, 0), NO_OFFSET)
        assert np.allclose(Gx, [[1, 0, 0], [0, 1, 1]])
        assert np.allclose(Gz, [[1, 0], [0, 1]])

    def test_second_column_linear_in_range(self):
        z1 = Observation(2.0, 0.7)
        z2 = Observation(4.0, 0.7)
        p = Pose(0.5, -1.0, 0.3)
        _, Gz1 = inverse_observation_jacobians(p, z1, LASER)
        _, Gz2 = inverse_observation_jacobians(p, z2, LASER)
        assert np.allclose(Gz2[:, 1], 2.0 * Gz1[:, 1])
        assert np.allclose(Gz2[:, 0], Gz1[:, 0])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        for cfg in (NO_OFFSET, LASER):
            for _ in range(25):
                p, _ = random_geometry(rng)
                z = Observation(rng.uniform(0.1, 80), rng.uniform(-math.pi, math.pi))
                Gx, Gz = inverse_observation_jacobians(p, z, cfg)

                def inv_pose(x):
                    return oracles.inverse_observe_f(
                        x, [z.range, z.bearing], cfg.sensor_offset
                    )

                def inv_meas(m):
                    return oracles.inverse_observe_f(
                        p.as_array(), m, cfg.sensor_offset
                    )

                fd_Gx = oracles.finite_difference(inv_pose, p.as_array())
                fd_Gz = oracles.finite_difference(
                    inv_meas, np.array([z.range, z.bearing])
                )
                assert oracles.relative_matrix_error(fd_Gx, Gx) < 1e-5
                assert oracles.relative_matrix_error(fd_Gz, Gz) < 1e-5

    def test_zero_range_rejected(self):
        with pytest.raises(ValueError):
            inverse_observation_jacobians(Pose(0, 0, 0), Observation(0.0, 0.1), NO_OFFSET)
