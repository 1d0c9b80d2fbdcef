"""EKF engine over a joint robot-plus-map state.

The state vector is ``[x, y, theta, lx_1, ly_1, ..., lx_N, ly_N]`` with a
dense covariance.  All operations are value-semantic: they return a new
``SlamState`` and never mutate their input.  The covariance is re-symmetrized
after every write so the PSD invariant survives long runs.

Updates are sequential, one landmark at a time, which keeps the innovation
covariance at 2x2 (or 1x1 for partial observations) and invertible in closed
form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .models import (
    ControlInput,
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

__all__ = [
    "ObservationMode",
    "SlamState",
    "KnownMap",
    "SingularInnovationError",
    "UnknownLandmarkError",
    "init_state",
    "predict",
    "update",
    "update_known_map",
    "init_landmark",
    "remove_landmark",
]

# Innovation covariance is treated as singular past this point.
DET_THRESHOLD = 1e-15
COND_THRESHOLD = 1e12


class SingularInnovationError(ArithmeticError):
    """Innovation covariance is numerically singular; the update was skipped."""


class UnknownLandmarkError(KeyError):
    """Landmark id is not registered in the state (or known map)."""


class ObservationMode(enum.Enum):
    """Which measurement components participate in an update."""

    RANGE_ONLY = "range"
    BEARING_ONLY = "bearing"
    RANGE_BEARING = "both"

    @property
    def rows(self) -> slice:
        if self is ObservationMode.RANGE_ONLY:
            return slice(0, 1)
        if self is ObservationMode.BEARING_ONLY:
            return slice(1, 2)
        return slice(0, 2)


@dataclass(frozen=True)
class SlamState:
    """Joint mean/covariance plus the landmark registry.

    ``ids`` maps registry order to landmark ids: the landmark at ``ids[k]``
    occupies mean indices ``3 + 2k : 5 + 2k``.  ``next_id`` is the monotone
    counter for fresh ids; removed ids are never reused.
    """

    mean: np.ndarray
    cov: np.ndarray
    ids: tuple[int, ...] = ()
    next_id: int = 0

    @property
    def n_landmarks(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return 3 + 2 * len(self.ids)

    def robot_pose(self) -> Pose:
        return Pose(self.mean[0], self.mean[1], self.mean[2])

    def robot_cov(self) -> np.ndarray:
        return self.cov[:3, :3].copy()

    def _slice(self, landmark_id: int) -> slice:
        try:
            k = self.ids.index(landmark_id)
        except ValueError:
            raise UnknownLandmarkError(landmark_id) from None
        return slice(3 + 2 * k, 5 + 2 * k)

    def landmark_position(self, landmark_id: int) -> LandmarkPosition:
        s = self._slice(landmark_id)
        return LandmarkPosition(self.mean[s.start], self.mean[s.start + 1])

    def landmark_cov(self, landmark_id: int) -> np.ndarray:
        s = self._slice(landmark_id)
        return self.cov[s, s].copy()

    def check_valid(self, tol: float = 1e-9) -> None:
        """Assert the state invariants (used by tests and debug runs)."""
        assert self.mean.shape == (self.dim,)
        assert self.cov.shape == (self.dim, self.dim)
        asym = float(np.max(np.abs(self.cov - self.cov.T))) if self.dim else 0.0
        assert asym <= tol, f"covariance asymmetry {asym} > {tol}"
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (self.cov + self.cov.T))))
        assert min_eig >= -tol, f"covariance min eigenvalue {min_eig} < -{tol}"
        assert -np.pi < self.mean[2] <= np.pi


@dataclass(frozen=True)
class KnownMap:
    """Landmarks with exactly known coordinates, for pure localisation."""

    landmarks: dict[int, LandmarkPosition]

    def __contains__(self, landmark_id: int) -> bool:
        return landmark_id in self.landmarks

    def position(self, landmark_id: int) -> LandmarkPosition:
        try:
            return self.landmarks[landmark_id]
        except KeyError:
            raise UnknownLandmarkError(landmark_id) from None


def _symmetrized(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def init_state(p0: Pose) -> SlamState:
    """Initial state: exactly known robot pose, empty map, zero covariance."""
    return SlamState(mean=p0.as_array(), cov=np.zeros((3, 3)), ids=(), next_id=0)


def predict(s: SlamState, u: ControlInput, T: float, cfg: MotionNoiseConfig) -> SlamState:
    """EKF time update: advance the robot sub-state, landmarks unchanged.

    The covariance update is P <- F P F^T + Pn with F block-diagonal in the
    motion Jacobian and the identity, and Pn carrying the propagated control
    noise in the robot block only.
    """
    pose = s.robot_pose()
    new_pose = motion_step(pose, u, T)
    Fx, Fu = motion_jacobians(pose, u, T)
    Q = process_noise(Fu, cfg)

    mean = s.mean.copy()
    mean[0:3] = new_pose.as_array()

    P = s.cov.copy()
    Pvv = P[:3, :3]
    Pvm = P[:3, 3:]
    P[:3, :3] = Fx @ Pvv @ Fx.T + Q
    if Pvm.size:
        new_vm = Fx @ Pvm
        P[:3, 3:] = new_vm
        P[3:, :3] = new_vm.T
    return SlamState(mean=mean, cov=_symmetrized(P), ids=s.ids, next_id=s.next_id)


def _innovation(z: Observation, predicted: Observation) -> np.ndarray:
    return np.array([z.range - predicted.range, wrap_angle(z.bearing - predicted.bearing)])


def _invert_innovation_cov(S: np.ndarray) -> np.ndarray:
    """Closed-form inverse of the 1x1 or 2x2 innovation covariance."""
    if S.shape == (1, 1):
        det = float(S[0, 0])
        if abs(det) < DET_THRESHOLD:
            raise SingularInnovationError(f"innovation variance {det} below threshold")
        return np.array([[1.0 / det]])
    det = float(S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0])
    if abs(det) < DET_THRESHOLD or np.linalg.cond(S) > COND_THRESHOLD:
        raise SingularInnovationError(f"innovation covariance singular (det={det})")
    return np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]]) / det


def _apply_update(
    s: SlamState, H: np.ndarray, nu: np.ndarray, R: np.ndarray
) -> tuple[SlamState, np.ndarray]:
    S = H @ s.cov @ H.T + R
    S_inv = _invert_innovation_cov(S)
    K = s.cov @ H.T @ S_inv
    mean = s.mean + K @ nu
    mean[2] = wrap_angle(mean[2])
    P = _symmetrized(s.cov - K @ S @ K.T)
    return SlamState(mean=mean, cov=P, ids=s.ids, next_id=s.next_id), nu


def update(
    s: SlamState,
    landmark_id: int,
    z: Observation,
    cfg: SensorNoiseConfig,
    mode: ObservationMode = ObservationMode.RANGE_BEARING,
) -> tuple[SlamState, np.ndarray]:
    """EKF measurement update against one registered landmark.

    Returns the posterior state and the innovation (bearing component
    wrapped).  Raises ``SingularInnovationError`` when the innovation
    covariance cannot be inverted; callers should skip the measurement and
    report it.
    """
    if z.range <= 0:
        raise ValueError("observation passed to the filter must have range > 0")
    sl = s._slice(landmark_id)
    pose = s.robot_pose()
    lm = s.landmark_position(landmark_id)

    predicted = observe(pose, lm, cfg)
    Hx, Hl = observation_jacobians(pose, lm)
    rows = mode.rows

    H = np.zeros((2, s.dim))
    H[:, 0:3] = Hx
    H[:, sl] = Hl
    H = H[rows, :]
    nu = _innovation(z, predicted)[rows]
    R = cfg.covariance()[rows, rows.start : rows.stop]
    return _apply_update(s, H, nu, R)


def update_known_map(
    s: SlamState,
    known_map: KnownMap,
    landmark_id: int,
    z: Observation,
    cfg: SensorNoiseConfig,
    mode: ObservationMode = ObservationMode.RANGE_BEARING,
) -> SlamState:
    """Localisation update: landmark coordinates come from the map as constants."""
    if s.n_landmarks != 0:
        raise ValueError("update_known_map requires a pure localisation state (N=0)")
    if z.range <= 0:
        raise ValueError("observation passed to the filter must have range > 0")
    lm = known_map.position(landmark_id)
    pose = s.robot_pose()

    predicted = observe(pose, lm, cfg)
    Hx, _ = observation_jacobians(pose, lm)
    rows = mode.rows

    H = Hx[rows, :]
    nu = _innovation(z, predicted)[rows]
    R = cfg.covariance()[rows, rows.start : rows.stop]
    new_state, _ = _apply_update(s, H, nu, R)
    return new_state


def init_landmark(
    s: SlamState, z: Observation, cfg: SensorNoiseConfig
) -> tuple[SlamState, int]:
    """Register a new landmark from an observation, augmenting mean and covariance.

    With (Gx, Gz) the inverse-observation Jacobians and R the measurement
    noise:

        P_LL = Gx P_vv Gx^T + Gz R Gz^T
        P_Lx = Gx [P_vv | P_v,map]     (cross-covariance with the whole prior)
    """
    pose = s.robot_pose()
    lm = inverse_observe(pose, z, cfg)
    Gx, Gz = inverse_observation_jacobians(pose, z, cfg)
    R = cfg.covariance()

    n = s.dim
    mean = np.concatenate([s.mean, lm.as_array()])
    P = np.zeros((n + 2, n + 2))
    P[:n, :n] = s.cov
    P_Lx = Gx @ s.cov[0:3, :]
    P_LL = Gx @ s.cov[0:3, 0:3] @ Gx.T + Gz @ R @ Gz.T
    P[n:, :n] = P_Lx
    P[:n, n:] = P_Lx.T
    P[n:, n:] = P_LL

    new_id = s.next_id
    return (
        SlamState(mean=mean, cov=_symmetrized(P), ids=s.ids + (new_id,), next_id=new_id + 1),
        new_id,
    )


def remove_landmark(s: SlamState, landmark_id: int) -> SlamState:
    """Drop a landmark's rows/columns; all remaining blocks are preserved."""
    sl = s._slice(landmark_id)
    keep = [i for i in range(s.dim) if not (sl.start <= i < sl.stop)]
    mean = s.mean[keep]
    cov = s.cov[np.ix_(keep, keep)]
    ids = tuple(i for i in s.ids if i != landmark_id)
    return SlamState(mean=mean, cov=cov, ids=ids, next_id=s.next_id)
