"""Motion and observation models for a planar range-bearing robot.

All operations here are pure functions shared by the filter, the simulator
and the test oracles.  Conventions used throughout the package:

* Angles are wrapped to (-pi, pi].
* The robot state is [x, y, theta] (meters, meters, radians).
* A range-bearing observation of a landmark at (lx, ly) from pose
  (x, y, theta) is

      range   = sqrt((lx - x)^2 + (ly - y)^2)
      bearing = wrap(atan2(ly - y, lx - x) - theta + sensor_offset)

  where ``sensor_offset`` is the angular mounting offset of the sensor
  (pi/2 for replayed laser logs whose beams span [0, 180] degrees, 0 for
  synthetic observation streams).
* Motion follows the first-order discrete unicycle model

      x'     = x + T v cos(theta)
      y'     = y + T v sin(theta)
      theta' = wrap(theta + T omega)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Pose",
    "ControlInput",
    "Observation",
    "LandmarkPosition",
    "MotionNoiseConfig",
    "SensorNoiseConfig",
    "DegenerateGeometryError",
    "wrap_angle",
    "motion_step",
    "motion_jacobians",
    "process_noise",
    "observe",
    "observation_jacobians",
    "inverse_observe",
    "inverse_observation_jacobians",
]

# Landmarks closer to the robot than this are rejected as degenerate.
MIN_LANDMARK_DISTANCE = 1e-9


class DegenerateGeometryError(ValueError):
    """Observation geometry too degenerate to evaluate (landmark on robot)."""


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


def wrap_angle(a: float) -> float:
    """Wrap an angle to the interval (-pi, pi].

    Accepts scalars or numpy arrays; the result is congruent to ``a``
    modulo 2*pi.
    """
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"angle must be finite, got {a!r}")
    # Wrapping -a into [-pi, pi) and negating yields (-pi, pi].
    wrapped = -(np.mod(-arr + np.pi, 2.0 * np.pi) - np.pi)
    if np.isscalar(a) or arr.ndim == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Pose:
    """Planar robot pose; heading is wrapped to (-pi, pi] on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        _require_finite("pose", self.x, self.y, self.theta)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class ControlInput:
    """Control sample: linear speed v (m/s) and yaw rate omega (rad/s)."""

    v: float
    omega: float

    def __post_init__(self):
        _require_finite("control", self.v, self.omega)


@dataclass(frozen=True)
class Observation:
    """Range-bearing measurement; bearing wrapped to (-pi, pi]."""

    range: float
    bearing: float

    def __post_init__(self):
        _require_finite("observation", self.range, self.bearing)
        if self.range < 0:
            raise ValueError(f"range must be >= 0, got {self.range}")
        object.__setattr__(self, "bearing", wrap_angle(self.bearing))


@dataclass(frozen=True)
class LandmarkPosition:
    """Landmark coordinates in the global frame."""

    lx: float
    ly: float

    def __post_init__(self):
        _require_finite("landmark", self.lx, self.ly)

    def as_array(self) -> np.ndarray:
        return np.array([self.lx, self.ly])


@dataclass(frozen=True)
class MotionNoiseConfig:
    """Standard deviations of the control input measurement noise."""

    sigma_v: float = 0.5
    sigma_omega: float = math.radians(2.0)

    def __post_init__(self):
        if not (self.sigma_v > 0 and self.sigma_omega > 0):
            raise ValueError("motion noise sigmas must be > 0")

    def covariance(self) -> np.ndarray:
        return np.diag([self.sigma_v**2, self.sigma_omega**2])


@dataclass(frozen=True)
class SensorNoiseConfig:
    """Range/bearing measurement noise plus the sensor mounting offset."""

    sigma_range: float = 0.2
    sigma_bearing: float = math.radians(2.0)
    sensor_offset: float = 0.0

    def __post_init__(self):
        if not (self.sigma_range > 0 and self.sigma_bearing > 0):
            raise ValueError("sensor noise sigmas must be > 0")
        _require_finite("sensor_offset", self.sensor_offset)

    def covariance(self) -> np.ndarray:
        return np.diag([self.sigma_range**2, self.sigma_bearing**2])


def _check_step(T: float) -> None:
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"time step must be > 0, got {T!r}")


def motion_step(p: Pose, u: ControlInput, T: float) -> Pose:
    """Advance a pose by one zero-order-hold step of the unicycle model."""
    _check_step(T)
    return Pose(
        p.x + T * u.v * math.cos(p.theta),
        p.y + T * u.v * math.sin(p.theta),
        wrap_angle(p.theta + T * u.omega),
    )


def motion_jacobians(p: Pose, u: ControlInput, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of ``motion_step`` w.r.t. the pose (Fx, 3x3) and the control (Fu, 3x2)."""
    _check_step(T)
    s, c = math.sin(p.theta), math.cos(p.theta)
    Fx = np.array(
        [
            [1.0, 0.0, -T * u.v * s],
            [0.0, 1.0, T * u.v * c],
            [0.0, 0.0, 1.0],
        ]
    )
    Fu = np.array(
        [
            [T * c, 0.0],
            [T * s, 0.0],
            [0.0, T],
        ]
    )
    return Fx, Fu


def process_noise(Fu: np.ndarray, cfg: MotionNoiseConfig) -> np.ndarray:
    """Propagate control noise into the pose: Q = Fu diag(sv^2, sw^2) Fu^T.

    The result is symmetrized to guard against floating-point drift; it is
    positive semidefinite by construction.
    """
    Fu = np.asarray(Fu, dtype=float)
    if Fu.shape != (3, 2):
        raise ValueError(f"Fu must be 3x2, got {Fu.shape}")
    Q = Fu @ cfg.covariance() @ Fu.T
    return 0.5 * (Q + Q.T)


def _relative(p: Pose, L: LandmarkPosition) -> tuple[float, float, float]:
    dx = L.lx - p.x
    dy = L.ly - p.y
    r = math.hypot(dx, dy)
    if r < MIN_LANDMARK_DISTANCE:
        raise DegenerateGeometryError(
            f"landmark {L} within {MIN_LANDMARK_DISTANCE} m of robot position"
        )
    return dx, dy, r


def observe(p: Pose, L: LandmarkPosition, cfg: SensorNoiseConfig) -> Observation:
    """Expected range-bearing measurement of a landmark from a pose."""
    dx, dy, r = _relative(p, L)
    bearing = wrap_angle(math.atan2(dy, dx) - p.theta + cfg.sensor_offset)
    return Observation(r, bearing)


def observation_jacobians(p: Pose, L: LandmarkPosition) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of ``observe`` w.r.t. the pose (Hx, 2x3) and the landmark (Hl, 2x2).

    The sensor offset is an additive constant and does not appear in either
    derivative.  Hl equals the negated first two columns of Hx.
    """
    dx, dy, r = _relative(p, L)
    r2 = r * r
    Hx = np.array(
        [
            [-dx / r, -dy / r, 0.0],
            [dy / r2, -dx / r2, -1.0],
        ]
    )
    Hl = -Hx[:, 0:2].copy()
    return Hx, Hl


def inverse_observe(p: Pose, z: Observation, cfg: SensorNoiseConfig) -> LandmarkPosition:
    """Place a landmark in the global frame from a pose and a measurement."""
    if z.range <= 0:
        raise ValueError(f"range must be > 0 to invert an observation, got {z.range}")
    phi = z.bearing - cfg.sensor_offset + p.theta
    return LandmarkPosition(p.x + z.range * math.cos(phi), p.y + z.range * math.sin(phi))


def inverse_observation_jacobians(
    p: Pose, z: Observation, cfg: SensorNoiseConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of ``inverse_observe`` w.r.t. the pose (Gx, 2x3) and the measurement (Gz, 2x2)."""
    if z.range <= 0:
        raise ValueError(f"range must be > 0 to invert an observation, got {z.range}")
    phi = z.bearing - cfg.sensor_offset + p.theta
    s, c = math.sin(phi), math.cos(phi)
    r = z.range
    Gx = np.array(
        [
            [1.0, 0.0, -r * s],
            [0.0, 1.0, r * c],
        ]
    )
    Gz = np.array(
        [
            [c, -r * s],
            [s, r * c],
        ]
    )
    return Gx, Gz
