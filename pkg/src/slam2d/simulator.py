"""Synthetic world generation and sensor log rendering.

Produces logs in the format understood by :mod:`slam2d.ingest`, plus a
ground-truth file for evaluation.  The default scenario drives a
figure-eight (constant speed, turn direction alternating at a fixed
period) through a disk of point landmarks.

Two observation products can be emitted per scan time:

* ``O`` records: range/bearing per visible landmark with the true identity
  attached (perception assumed perfect), bearing relative to the robot
  heading (sensor offset 0).
* ``L`` records: a rendered 361-beam laser scan covering 180 degrees, with
  the sensor's zero beam pointing to the robot's right (sensor offset
  pi/2).  Anonymous; the consumer must segment and associate.

Scan noise is injected per object per scan: each visible object's position
is jittered in range/bearing once, then the scan is rendered from the
jittered positions.  Beams within one object's cluster therefore agree,
so measurement noise cannot split a cluster during segmentation.

Truth file format::

    # slamtruth v1
    M <id> <x> <y>
    P <t> <x> <y> <theta>

Map file format (landmarks only)::

    # slammap v1
    M <id> <x> <y>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .filter import KnownMap
from .ingest import GYRO, OBS, SCAN, SPEED, LogFile, SensorRecord
from .models import (
    ControlInput,
    LandmarkPosition,
    MotionNoiseConfig,
    Observation,
    Pose,
    SensorNoiseConfig,
    inverse_observe,
    motion_step,
    observe,
    wrap_angle,
)
from .perception import BEAM_COUNT, BEAM_STEP, LaserScan

__all__ = [
    "MAX_SPEED",
    "MAX_TURN_RATE",
    "LASER_OFFSET",
    "DynamicObject",
    "ScenarioConfig",
    "GroundTruth",
    "figure_eight_schedule",
    "default_scenario",
    "slam_scenario",
    "render_scan",
    "simulate",
    "save_truth",
    "load_truth",
    "save_map",
    "load_map",
    "save_log_files",
    "parse_scenario",
    "save_scenario",
]

MAX_SPEED = 30.0
MAX_TURN_RATE = math.radians(60.0)

# The rendered laser's zero beam points to the robot's right; beam 180
# points straight ahead.
LASER_OFFSET = math.pi / 2

# Known-association O records report bearing relative to the heading itself.
_HEADING_FRAME = SensorNoiseConfig(sensor_offset=0.0)


@dataclass(frozen=True)
class DynamicObject:
    """A point object moving at constant velocity; appears in scans only."""

    x0: float
    y0: float
    vx: float
    vy: float

    def position(self, t: float) -> LandmarkPosition:
        return LandmarkPosition(self.x0 + self.vx * t, self.y0 + self.vy * t)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines a simulation run except the RNG seed.

    ``schedule`` is a list of (duration, v, omega) segments applied in
    order once ``stationary_duration`` has elapsed; None selects the
    figure-eight default.  ``motion_noise``/``sensor_noise`` of None turn
    the respective noise source off entirely.
    """

    duration: float = 120.0
    dt: float = 0.1
    scan_dt: float = 0.2
    # The default loop traces 50 m figure-eight lobes at 15 m/s, tilted 45
    # degrees so drift spreads over both axes: large and fast enough that
    # uncorrected control noise accumulates metres of error within two
    # minutes, yet compact enough that the landmark field stays in range.
    start: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 3 * math.pi / 4))
    speed: float = 15.0
    turn_rate: float = 0.3
    turn_period: float = 2.0 * math.pi / 0.3
    schedule: Optional[list[tuple[float, float, float]]] = None
    stationary_duration: float = 0.0
    n_landmarks: int = 40
    # Landmarks cover the whole area the default loop sweeps, so some are
    # always within observation range wherever the robot is.
    map_radius: float = 100.0
    min_landmark_spacing: float = 4.0
    landmarks: Optional[dict[int, LandmarkPosition]] = None
    max_range: float = 80.0
    # Identity-tagged (O) observations come from omnidirectional beacons
    # with their own, shorter reporting range.
    obs_range: float = 60.0
    cluster_beams: int = 5
    motion_noise: Optional[MotionNoiseConfig] = field(default_factory=MotionNoiseConfig)
    # Noise on O records (identity-tagged range/bearing observations).
    sensor_noise: Optional[SensorNoiseConfig] = field(default_factory=SensorNoiseConfig)
    # Noise on rendered scans: one radial draw per object per scan.  A
    # scanning laser is far more precise than the synthetic-observation
    # noise model above, and association by position needs it to be.
    laser_noise: Optional[SensorNoiseConfig] = field(
        default_factory=lambda: SensorNoiseConfig(
            sigma_range=0.05, sigma_bearing=math.radians(0.1)
        )
    )
    speed_bias: float = 0.0
    gyro_bias: float = 0.0
    dynamic_objects: tuple[DynamicObject, ...] = ()
    emit_obs: bool = True
    emit_scans: bool = True

    def __post_init__(self):
        if not (self.duration > 0 and self.dt > 0):
            raise ValueError("duration and dt must be > 0")
        if abs(round(self.scan_dt / self.dt) * self.dt - self.scan_dt) > 1e-9:
            raise ValueError("scan_dt must be a multiple of dt")
        for _, v, w in self.schedule or []:
            if abs(v) > MAX_SPEED or abs(w) > MAX_TURN_RATE:
                raise ValueError(f"control out of range: v={v}, omega={w}")
        if abs(self.speed) > MAX_SPEED or abs(self.turn_rate) > MAX_TURN_RATE:
            raise ValueError("speed/turn_rate out of range")
        if self.cluster_beams < 1:
            raise ValueError("cluster_beams must be >= 1")

    def resolved_schedule(self) -> list[tuple[float, float, float]]:
        if self.schedule is not None:
            return list(self.schedule)
        return figure_eight_schedule(
            self.duration, self.turn_period, self.speed, self.turn_rate
        )

    def control_at(self, t: float) -> ControlInput:
        """True control at time t (stationary prelude, then the schedule)."""
        if t < self.stationary_duration:
            return ControlInput(0.0, 0.0)
        rel = t - self.stationary_duration
        for seg_duration, v, w in self.resolved_schedule():
            if rel < seg_duration:
                return ControlInput(v, w)
            rel -= seg_duration
        return ControlInput(0.0, 0.0)


@dataclass(frozen=True)
class GroundTruth:
    """True poses at every control timestamp plus the true landmark map."""

    poses: list[tuple[float, Pose]]
    landmarks: dict[int, LandmarkPosition]

    def known_map(self) -> KnownMap:
        return KnownMap(dict(self.landmarks))

    def pose_at(self, t: float) -> Pose:
        for ts, p in self.poses:
            if ts == t:
                return p
        raise KeyError(f"no truth pose at t={t}")


def figure_eight_schedule(
    duration: float, period: float, speed: float, turn_rate: float
) -> list[tuple[float, float, float]]:
    """Constant speed, turn direction flipping every ``period`` seconds."""
    segments = []
    t, sign = 0.0, 1.0
    while t < duration:
        segments.append((min(period, duration - t), speed, sign * turn_rate))
        t += period
        sign = -sign
    return segments


def default_scenario(**overrides) -> ScenarioConfig:
    """The stock figure-eight scenario; keyword overrides replace fields."""
    return ScenarioConfig(**overrides)


def slam_scenario(**overrides) -> ScenarioConfig:
    """The stock mapping scenario: a compact, slow figure-eight.

    The path stays inside a small landmark field so every beacon remains
    within reporting range for the whole run and the loop closes once per
    lap.  That makes it the natural setting for demonstrating map building
    and loop-closure behaviour, whereas :func:`default_scenario` trades
    coverage for the long, fast course that separates dead reckoning from
    the filtered estimates.
    """
    base = dict(
        start=Pose(0.0, 0.0, math.pi / 2),
        speed=2.0,
        turn_rate=math.radians(20.0),
        turn_period=18.0,
        n_landmarks=20,
        map_radius=40.0,
        obs_range=60.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def _beam_index(pose: Pose, target: LandmarkPosition) -> int:
    """Beam index the target falls on, or -1 when outside the field of view."""
    alpha = wrap_angle(
        math.atan2(target.ly - pose.y, target.lx - pose.x) - pose.theta + LASER_OFFSET
    )
    c = round(alpha / BEAM_STEP)
    return c if 0 <= c < BEAM_COUNT else -1


def render_scan(
    pose: Pose,
    objects: Sequence[LandmarkPosition],
    timestamp: float,
    max_range: float = 80.0,
    cluster_beams: int = 5,
) -> LaserScan:
    """Render a deterministic 361-beam scan of point objects.

    Each visible object returns a flat cluster of ``cluster_beams``
    consecutive beams centred on its true bearing (clipped at the field
    of view edges).  Overlapping clusters resolve per beam to the nearer
    object; beams hitting nothing read exactly ``max_range``.
    """
    ranges = np.full(BEAM_COUNT, float(max_range))
    half = cluster_beams // 2
    for obj in objects:
        r = math.hypot(obj.lx - pose.x, obj.ly - pose.y)
        if r >= max_range:
            continue
        c = _beam_index(pose, obj)
        if c < 0:
            continue
        lo, hi = max(0, c - half), min(BEAM_COUNT - 1, c + half)
        ranges[lo : hi + 1] = np.minimum(ranges[lo : hi + 1], r)
    return LaserScan(timestamp=timestamp, ranges=ranges, max_range=max_range)


def _generate_landmarks(rng: np.random.Generator, cfg: ScenarioConfig) -> dict[int, LandmarkPosition]:
    """Rejection-sample landmarks in a disk with a minimum mutual spacing."""
    placed: list[LandmarkPosition] = []
    attempts = 0
    while len(placed) < cfg.n_landmarks:
        attempts += 1
        if attempts > 10_000 * cfg.n_landmarks:
            raise RuntimeError("could not place landmarks with requested spacing")
        rad = cfg.map_radius * math.sqrt(rng.uniform())
        ang = rng.uniform(0.0, 2.0 * math.pi)
        p = LandmarkPosition(rad * math.cos(ang), rad * math.sin(ang))
        if math.hypot(p.lx - cfg.start.x, p.ly - cfg.start.y) < 2.0:
            continue
        if any(
            math.hypot(p.lx - q.lx, p.ly - q.ly) < cfg.min_landmark_spacing for q in placed
        ):
            continue
        placed.append(p)
    return {i: p for i, p in enumerate(placed)}


def _jitter(
    rng: np.random.Generator, pose: Pose, obj: LandmarkPosition, noise: SensorNoiseConfig
) -> Optional[LandmarkPosition]:
    """Perturb one object's position by a single range/bearing draw."""
    z = observe(pose, obj, _HEADING_FRAME)
    r = z.range + rng.normal(0.0, noise.sigma_range)
    b = z.bearing + rng.normal(0.0, noise.sigma_bearing)
    if r <= 0.05:
        r = 0.05
    return inverse_observe(pose, Observation(r, b), _HEADING_FRAME)


def simulate(cfg: ScenarioConfig, seed: int = 0) -> tuple[GroundTruth, LogFile]:
    """Run a scenario and return ground truth plus the rendered sensor log.

    Deterministic for a given (cfg, seed).  Truth poses integrate the
    true controls; S/G records carry the noisy, possibly biased
    measurements of those controls.
    """
    # Independent child streams so the control-noise sequence (and hence
    # the dead-reckoning drift of a seed) does not depend on how many
    # observations or scan returns the sensor settings happen to produce.
    map_rng, ctrl_rng, obs_rng, scan_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)
    )
    landmarks = dict(cfg.landmarks) if cfg.landmarks is not None else _generate_landmarks(map_rng, cfg)
    lm_order = sorted(landmarks)

    n_steps = round(cfg.duration / cfg.dt)
    scan_every = round(cfg.scan_dt / cfg.dt)

    records: list[SensorRecord] = []
    truth_poses: list[tuple[float, Pose]] = []
    pose = cfg.start

    for k in range(n_steps):
        t = k * cfg.dt
        u = cfg.control_at(t)
        truth_poses.append((t, pose))

        v_meas = u.v + cfg.speed_bias
        w_meas = u.omega + cfg.gyro_bias
        if cfg.motion_noise is not None:
            v_meas += ctrl_rng.normal(0.0, cfg.motion_noise.sigma_v)
            w_meas += ctrl_rng.normal(0.0, cfg.motion_noise.sigma_omega)
        records.append(SensorRecord(t, SPEED, v_meas))
        records.append(SensorRecord(t, GYRO, (0.0, 0.0, w_meas)))

        if k % scan_every == 0:

            def dist_to(p: LandmarkPosition) -> float:
                return math.hypot(p.lx - pose.x, p.ly - pose.y)

            if cfg.emit_obs:
                # O records model identity-tagged beacons: range-limited but
                # omnidirectional, unlike the forward-facing laser below.
                for lid in lm_order:
                    if dist_to(landmarks[lid]) >= cfg.obs_range:
                        continue
                    z = observe(pose, landmarks[lid], _HEADING_FRAME)
                    r, b = z.range, z.bearing
                    if cfg.sensor_noise is not None:
                        r += obs_rng.normal(0.0, cfg.sensor_noise.sigma_range)
                        b += obs_rng.normal(0.0, cfg.sensor_noise.sigma_bearing)
                    records.append(SensorRecord(t, OBS, (lid, max(r, 0.0), wrap_angle(b))))
            if cfg.emit_scans:
                objs = [
                    landmarks[lid]
                    for lid in lm_order
                    if _beam_index(pose, landmarks[lid]) >= 0
                    and dist_to(landmarks[lid]) < cfg.max_range
                ]
                objs += [
                    d.position(t)
                    for d in cfg.dynamic_objects
                    if _beam_index(pose, d.position(t)) >= 0
                    and dist_to(d.position(t)) < cfg.max_range
                ]
                if cfg.laser_noise is not None:
                    objs = [_jitter(scan_rng, pose, o, cfg.laser_noise) for o in objs]
                scan = render_scan(pose, objs, t, cfg.max_range, cfg.cluster_beams)
                records.append(SensorRecord(t, SCAN, scan))

        pose = motion_step(pose, u, cfg.dt)

    truth = GroundTruth(poses=truth_poses, landmarks=landmarks)
    log = LogFile(
        records=records,
        stationary_until=cfg.stationary_duration,
        start=cfg.start,
        max_range=cfg.max_range,
    )
    return truth, log


def _fmt(x: float) -> str:
    return repr(float(x))


def save_truth(truth: GroundTruth, path) -> None:
    lines = ["# slamtruth v1"]
    for lid in sorted(truth.landmarks):
        p = truth.landmarks[lid]
        lines.append(f"M {lid} {_fmt(p.lx)} {_fmt(p.ly)}")
    for t, p in truth.poses:
        lines.append(f"P {_fmt(t)} {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.theta)}")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_truth(path) -> GroundTruth:
    landmarks: dict[int, LandmarkPosition] = {}
    poses: list[tuple[float, Pose]] = []
    with open(path, "r", encoding="ascii") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line_no == 1 and not line.startswith("# slamtruth v1"):
                    raise ValueError(f"line {line_no}: expected '# slamtruth v1' header")
                continue
            parts = line.split()
            if parts[0] == "M" and len(parts) == 4:
                landmarks[int(parts[1])] = LandmarkPosition(float(parts[2]), float(parts[3]))
            elif parts[0] == "P" and len(parts) == 5:
                poses.append(
                    (float(parts[1]), Pose(float(parts[2]), float(parts[3]), float(parts[4])))
                )
            else:
                raise ValueError(f"line {line_no}: bad truth record {line!r}")
    return GroundTruth(poses=poses, landmarks=landmarks)


def save_map(
    landmarks: Union[KnownMap, dict[int, LandmarkPosition]],
    path,
    covariances: Optional[dict[int, np.ndarray]] = None,
) -> None:
    """Write a landmark map; covariances add 4 row-major floats per line."""
    if isinstance(landmarks, KnownMap):
        landmarks = landmarks.landmarks
    lines = ["# slammap v1"]
    for lid in sorted(landmarks):
        p = landmarks[lid]
        line = f"M {lid} {_fmt(p.lx)} {_fmt(p.ly)}"
        if covariances is not None and lid in covariances:
            c = np.asarray(covariances[lid])
            line += f" {_fmt(c[0, 0])} {_fmt(c[0, 1])} {_fmt(c[1, 0])} {_fmt(c[1, 1])}"
        lines.append(line)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_map(path) -> KnownMap:
    """Read a landmark map; per-landmark covariance columns are ignored."""
    landmarks: dict[int, LandmarkPosition] = {}
    with open(path, "r", encoding="ascii") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line_no == 1 and not line.startswith("# slammap v1"):
                    raise ValueError(f"line {line_no}: expected '# slammap v1' header")
                continue
            parts = line.split()
            if parts[0] == "M" and len(parts) in (4, 8):
                landmarks[int(parts[1])] = LandmarkPosition(float(parts[2]), float(parts[3]))
            else:
                raise ValueError(f"line {line_no}: bad map record {line!r}")
    return KnownMap(landmarks)


def save_log_files(log: LogFile, truth: GroundTruth, out_dir) -> list:
    """Write log.txt, truth.txt and map.txt into a directory; return the paths.

    map.txt repeats the truth landmarks in known-map form so a localisation
    run can consume them directly.
    """
    from pathlib import Path

    from .ingest import save_log

    out = Path(out_dir)
    log_path, truth_path, map_path = out / "log.txt", out / "truth.txt", out / "map.txt"
    save_log(log, log_path)
    save_truth(truth, truth_path)
    save_map(truth.landmarks, map_path)
    return [log_path, truth_path, map_path]


# -- scenario files -----------------------------------------------------------

_SCENARIO_BOOLS = ("emit_obs", "emit_scans")
_SCENARIO_FLOATS = (
    "duration",
    "dt",
    "scan_dt",
    "stationary_duration",
    "map_radius",
    "min_landmark_spacing",
    "max_range",
    "obs_range",
    "speed",
    "turn_period",
    "speed_bias",
    "gyro_bias",
)


def parse_scenario(path) -> ScenarioConfig:
    """Read a scenario description from an INI file.

    Angles appear in degrees under ``*_deg`` keys.  Optional sections:
    ``[schedule]`` with ``duration v omega_deg`` segments, ``[dynamics]``
    with ``x0 y0 vx vy`` objects, ``[landmarks]`` with ``id = x y`` entries.
    """
    import configparser

    ini = configparser.ConfigParser()
    with open(path, "r", encoding="ascii") as f:
        ini.read_file(f, source=str(path))
    if "scenario" not in ini:
        raise ValueError(f"{path}: missing [scenario] section")
    sec = ini["scenario"]

    kwargs: dict = {}
    for key in _SCENARIO_FLOATS:
        if key in sec:
            kwargs[key] = sec.getfloat(key)
    for key in _SCENARIO_BOOLS:
        if key in sec:
            kwargs[key] = sec.getboolean(key)
    if "n_landmarks" in sec:
        kwargs["n_landmarks"] = sec.getint("n_landmarks")
    if "cluster_beams" in sec:
        kwargs["cluster_beams"] = sec.getint("cluster_beams")
    if "turn_rate_deg" in sec:
        kwargs["turn_rate"] = math.radians(sec.getfloat("turn_rate_deg"))
    if "start" in sec:
        x, y, theta = (float(v) for v in sec.get("start").split())
        kwargs["start"] = Pose(x, y, theta)

    if sec.getboolean("motion_noise", fallback=True):
        kwargs["motion_noise"] = MotionNoiseConfig(
            sigma_v=sec.getfloat("sigma_v", fallback=0.5),
            sigma_omega=math.radians(sec.getfloat("sigma_omega_deg", fallback=2.0)),
        )
    else:
        kwargs["motion_noise"] = None
    if sec.getboolean("sensor_noise", fallback=True):
        kwargs["sensor_noise"] = SensorNoiseConfig(
            sigma_range=sec.getfloat("sigma_range", fallback=0.2),
            sigma_bearing=math.radians(sec.getfloat("sigma_bearing_deg", fallback=2.0)),
        )
    else:
        kwargs["sensor_noise"] = None
    if sec.getboolean("laser_noise", fallback=True):
        kwargs["laser_noise"] = SensorNoiseConfig(
            sigma_range=sec.getfloat("sigma_laser_range", fallback=0.05),
            sigma_bearing=math.radians(sec.getfloat("sigma_laser_bearing_deg", fallback=0.1)),
        )
    else:
        kwargs["laser_noise"] = None

    if "schedule" in ini and ini["schedule"]:
        segments = []
        for _, value in ini["schedule"].items():
            duration, v, omega_deg = (float(p) for p in value.split())
            segments.append((duration, v, math.radians(omega_deg)))
        kwargs["schedule"] = segments
    if "dynamics" in ini and ini["dynamics"]:
        objs = []
        for _, value in ini["dynamics"].items():
            x0, y0, vx, vy = (float(p) for p in value.split())
            objs.append(DynamicObject(x0, y0, vx, vy))
        kwargs["dynamic_objects"] = tuple(objs)
    if "landmarks" in ini and ini["landmarks"]:
        lms = {}
        for key, value in ini["landmarks"].items():
            x, y = (float(p) for p in value.split())
            lms[int(key)] = LandmarkPosition(x, y)
        kwargs["landmarks"] = lms

    return ScenarioConfig(**kwargs)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    """Write a scenario to INI form readable by ``parse_scenario``."""
    import configparser

    ini = configparser.ConfigParser()
    sec = {
        key: repr(getattr(cfg, key)) for key in _SCENARIO_FLOATS
    }
    sec["n_landmarks"] = str(cfg.n_landmarks)
    sec["cluster_beams"] = str(cfg.cluster_beams)
    sec["turn_rate_deg"] = repr(math.degrees(cfg.turn_rate))
    sec["start"] = f"{_fmt(cfg.start.x)} {_fmt(cfg.start.y)} {_fmt(cfg.start.theta)}"
    sec["emit_obs"] = "on" if cfg.emit_obs else "off"
    sec["emit_scans"] = "on" if cfg.emit_scans else "off"
    if cfg.motion_noise is None:
        sec["motion_noise"] = "off"
    else:
        sec["motion_noise"] = "on"
        sec["sigma_v"] = repr(cfg.motion_noise.sigma_v)
        sec["sigma_omega_deg"] = repr(math.degrees(cfg.motion_noise.sigma_omega))
    if cfg.sensor_noise is None:
        sec["sensor_noise"] = "off"
    else:
        sec["sensor_noise"] = "on"
        sec["sigma_range"] = repr(cfg.sensor_noise.sigma_range)
        sec["sigma_bearing_deg"] = repr(math.degrees(cfg.sensor_noise.sigma_bearing))
    if cfg.laser_noise is None:
        sec["laser_noise"] = "off"
    else:
        sec["laser_noise"] = "on"
        sec["sigma_laser_range"] = repr(cfg.laser_noise.sigma_range)
        sec["sigma_laser_bearing_deg"] = repr(math.degrees(cfg.laser_noise.sigma_bearing))
    ini["scenario"] = sec
    if cfg.schedule is not None:
        ini["schedule"] = {
            f"seg{i}": f"{_fmt(d)} {_fmt(v)} {_fmt(math.degrees(w))}"
            for i, (d, v, w) in enumerate(cfg.schedule)
        }
    if cfg.dynamic_objects:
        ini["dynamics"] = {
            f"obj{i}": f"{_fmt(o.x0)} {_fmt(o.y0)} {_fmt(o.vx)} {_fmt(o.vy)}"
            for i, o in enumerate(cfg.dynamic_objects)
        }
    if cfg.landmarks is not None:
        ini["landmarks"] = {
            str(lid): f"{_fmt(p.lx)} {_fmt(p.ly)}" for lid, p in sorted(cfg.landmarks.items())
        }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        ini.write(f)
