"""End-to-end estimation runs: sensor log in, run log out.

The pipeline replays a parsed log in time order.  Speed/gyro records are
held (zero-order) and integrated into the state at the next record
timestamp; observation records first bring the state up to their own
timestamp, then apply a measurement update.  Rows are emitted at every
distinct record timestamp.

Observation sources:

* ``obs``   — ``O`` records with known identities.  Localisation against a
  known map when one is supplied, otherwise SLAM keyed by external id.
* ``scans`` — ``L`` records.  Scans are segmented; landmark-sized objects
  become detections; detections are matched to the current map by mutual
  nearest neighbour.  Leftovers feed a candidate tracker whose promotions
  register new landmarks (``quality=True``) or are registered immediately
  (``quality=False``).
* ``none``  — observations ignored; the filter only predicts.

Dead reckoning (``estimator="dr"``) integrates the same control stream
with no correction and reports no covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import groupby
from typing import Optional

import numpy as np

from .filter import (
    KnownMap,
    ObservationMode,
    SingularInnovationError,
    SlamState,
    init_landmark,
    init_state,
    predict,
    update,
    update_known_map,
)
from .ingest import GYRO, OBS, SCAN, SPEED, LogFile, debias, estimate_bias
from .models import (
    ControlInput,
    MotionNoiseConfig,
    Observation,
    Pose,
    SensorNoiseConfig,
    motion_step,
)
from .evaluation import RunLog, RunRow
from .perception import (
    LandmarkCandidate,
    QualityParams,
    associate,
    extract_detections,
    prefilter,
    segment_scan,
    update_quality,
)
from .simulator import LASER_OFFSET, GroundTruth, ScenarioConfig, simulate

__all__ = ["PipelineConfig", "PipelineResult", "run_pipeline", "run_batch"]


@dataclass(frozen=True)
class PipelineConfig:
    """Estimator selection plus every tunable threshold of the run."""

    estimator: str = "ekf"  # "ekf" | "dr"
    source: str = "scans"  # "scans" | "obs" | "none"
    mode: ObservationMode = ObservationMode.RANGE_BEARING
    known_map: Optional[KnownMap] = None
    motion_noise: MotionNoiseConfig = field(default_factory=MotionNoiseConfig)
    # Measurement noise for O records.
    sigma_range: float = 0.2
    sigma_bearing: float = math.radians(2.0)
    # Measurement noise for scan detections: laser jitter plus the half-beam
    # quantisation of the cluster centre.
    scan_sigma_range: float = 0.05
    scan_sigma_bearing: float = math.radians(0.2)
    bias_window: Optional[float] = None  # None: use log header; 0 disables
    gap: float = 0.25
    size_min: int = 3
    size_max: int = 8
    use_prefilter: bool = True
    min_separation: float = 2.0
    quality: bool = True
    quality_params: QualityParams = field(default_factory=QualityParams)
    d_max: float = 0.3
    label: str = "run"

    def __post_init__(self):
        if self.estimator not in ("ekf", "dr"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.source not in ("scans", "obs", "none"):
            raise ValueError(f"unknown source {self.source!r}")

    def scan_sensor(self) -> SensorNoiseConfig:
        return SensorNoiseConfig(
            self.scan_sigma_range, self.scan_sigma_bearing, LASER_OFFSET
        )

    def obs_sensor(self) -> SensorNoiseConfig:
        return SensorNoiseConfig(self.sigma_range, self.sigma_bearing, 0.0)


class _Replay:
    """Mutable cursor shared by the EKF and dead-reckoning replays."""

    def __init__(self, cfg: PipelineConfig, start: Pose):
        self.cfg = cfg
        self.t: Optional[float] = None
        self.v = 0.0
        self.w = 0.0
        self.dr_pose = start
        self.state: SlamState = init_state(start)
        self.ext2int: dict[int, int] = {}
        self.tracker: list[LandmarkCandidate] = []
        self.next_cid = 0
        self.assoc_cum = 0
        self.rows: list[RunRow] = []

    # -- time ---------------------------------------------------------------

    def advance(self, to_t: float) -> None:
        if self.t is None:
            self.t = to_t
            return
        dt = to_t - self.t
        if dt <= 0:
            return
        u = ControlInput(self.v, self.w)
        if self.cfg.estimator == "dr":
            self.dr_pose = motion_step(self.dr_pose, u, dt)
        else:
            self.state = predict(self.state, u, dt, self.cfg.motion_noise)
        self.t = to_t

    # -- observation handling -------------------------------------------------

    def handle_obs(self, payload: tuple[int, float, float]) -> None:
        ext_id, rng, bearing = payload
        z = Observation(rng, bearing)
        if z.range <= 0:
            return
        sensor = self.cfg.obs_sensor()
        if self.cfg.known_map is not None:
            if ext_id not in self.cfg.known_map:
                return
            try:
                self.state = update_known_map(
                    self.state, self.cfg.known_map, ext_id, z, sensor, self.cfg.mode
                )
            except SingularInnovationError:
                pass
            return
        if ext_id in self.ext2int:
            try:
                self.state, _ = update(
                    self.state, self.ext2int[ext_id], z, sensor, self.cfg.mode
                )
            except SingularInnovationError:
                pass
        else:
            self.state, new_id = init_landmark(self.state, z, sensor)
            self.ext2int[ext_id] = new_id

    def handle_scan(self, scan) -> None:
        cfg = self.cfg
        sensor = cfg.scan_sensor()
        segments = segment_scan(scan, cfg.gap)
        dets = extract_detections(
            segments, self.state.robot_pose(), sensor, cfg.size_min, cfg.size_max
        )
        if cfg.use_prefilter and dets:
            kept = {id(p) for p in prefilter([p for _, p in dets], cfg.min_separation)}
            dets = [d for d in dets if id(d[1]) in kept]

        if cfg.known_map is not None:
            prior_ids = sorted(cfg.known_map.landmarks)
            prior_pos = [cfg.known_map.position(i) for i in prior_ids]
        else:
            prior_ids = list(self.state.ids)
            prior_pos = [self.state.landmark_position(i) for i in prior_ids]

        result = associate([p for _, p in dets], prior_pos, cfg.d_max)
        self.assoc_cum += result.comparisons
        for i, j in result.pairs:
            try:
                if cfg.known_map is not None:
                    self.state = update_known_map(
                        self.state, cfg.known_map, prior_ids[j], dets[i][0], sensor, cfg.mode
                    )
                else:
                    self.state, _ = update(
                        self.state, prior_ids[j], dets[i][0], sensor, cfg.mode
                    )
            except SingularInnovationError:
                continue

        if cfg.known_map is not None:
            return  # localisation only: never grow the map

        leftovers = [dets[i] for i in result.unmatched_new]
        if not cfg.quality:
            for z, _ in leftovers:
                self.state, _ = init_landmark(self.state, z, sensor)
            return

        self.assoc_cum += len(leftovers) * len(self.tracker)
        self.tracker, promoted, _, self.next_cid = update_quality(
            self.tracker,
            [p for _, p in leftovers],
            scan.timestamp,
            cfg.quality_params,
            self.next_cid,
        )
        for cand in promoted:
            z = self._matching_detection(cand, leftovers)
            if z is not None:
                self.state, _ = init_landmark(self.state, z, sensor)
            self.tracker = [c for c in self.tracker if c.candidate_id != cand.candidate_id]

    @staticmethod
    def _matching_detection(
        cand: LandmarkCandidate, dets: list
    ) -> Optional[Observation]:
        """The current-scan observation that matched a promoted candidate."""
        best, best_d = None, math.inf
        for z, pos in dets:
            d = math.hypot(pos.lx - cand.centre_global.lx, pos.ly - cand.centre_global.ly)
            if d < best_d:
                best, best_d = z, d
        return best

    # -- output ---------------------------------------------------------------

    def emit_row(self) -> None:
        if self.cfg.estimator == "dr":
            self.rows.append(
                RunRow(t=self.t, pose=self.dr_pose, cov_diag=None)
            )
            return
        cov = self.state.robot_cov()
        traces = {
            lid: float(np.trace(self.state.landmark_cov(lid))) for lid in self.state.ids
        }
        self.rows.append(
            RunRow(
                t=self.t,
                pose=self.state.robot_pose(),
                cov_diag=(float(cov[0, 0]), float(cov[1, 1]), float(cov[2, 2])),
                n_landmarks=self.state.n_landmarks,
                assoc_cum=self.assoc_cum,
                landmark_traces=traces,
                qualities={c.candidate_id: c.quality for c in self.tracker},
            )
        )


@dataclass(frozen=True)
class PipelineResult:
    """A finished run: the row log plus the filter's final internals."""

    run: RunLog
    final_state: Optional[SlamState]  # None for dead reckoning
    tracker: list[LandmarkCandidate]

    def final_map(self) -> dict[int, tuple]:
        """Final landmark estimates as id -> (position, 2x2 covariance)."""
        if self.final_state is None:
            return {}
        s = self.final_state
        return {
            lid: (s.landmark_position(lid), s.landmark_cov(lid)) for lid in s.ids
        }


def run_pipeline(log: LogFile, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Replay a log through the configured estimator and collect run rows."""
    records = log.records
    if not records:
        raise ValueError("log has no records")

    window = cfg.bias_window
    if window is None:
        window = log.stationary_until
    if window and window > 0:
        records = debias(records, estimate_bias(records, window))

    start = log.start if log.start is not None else Pose(0.0, 0.0, 0.0)
    replay = _Replay(cfg, start)

    for t, group in groupby(records, key=lambda r: r.timestamp):
        replay.advance(t)
        for rec in group:
            if rec.kind == SPEED:
                replay.v = rec.payload
            elif rec.kind == GYRO:
                replay.w = rec.payload[2]
            elif cfg.estimator == "dr" or cfg.source == "none":
                continue
            elif rec.kind == OBS and cfg.source == "obs":
                replay.handle_obs(rec.payload)
            elif rec.kind == SCAN and cfg.source == "scans":
                replay.handle_scan(rec.payload)
        replay.emit_row()

    return PipelineResult(
        run=RunLog(rows=replay.rows, label=cfg.label),
        final_state=None if cfg.estimator == "dr" else replay.state,
        tracker=replay.tracker,
    )


def run_batch(
    scenario: ScenarioConfig,
    cfg: PipelineConfig,
    seeds: list[int],
) -> list[tuple[PipelineResult, GroundTruth]]:
    """Simulate and run one pipeline per seed; labels gain a seed suffix."""
    out = []
    for seed in seeds:
        truth, log = simulate(scenario, seed)
        result = run_pipeline(log, replace(cfg, label=f"{cfg.label}-s{seed}"))
        out.append((result, truth))
    return out
