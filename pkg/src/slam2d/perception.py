"""Laser scan processing: segmentation, landmark extraction, association
and the landmark quality tracker.

A scan is 361 beams at 0.5 degree spacing over [0, 180] degrees.  Beams at
the sensor saturation range are treated as invalid returns: they still occupy
segments (so segments partition the scan) but saturated segments never yield
landmarks, which suppresses phantom "range limit" features.

The quality tracker scores candidates +1 per re-observation and -3 per miss;
candidates are promoted past ``set_threshold`` and deleted below
``clear_threshold``.  Candidate positions stay pinned at their first
detection, so anything that drifts out of the association gate decays and is
cleared, which is what rejects moving objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .models import (
    LandmarkPosition,
    Observation,
    Pose,
    SensorNoiseConfig,
    inverse_observe,
)

__all__ = [
    "BEAM_COUNT",
    "BEAM_STEP",
    "LaserScan",
    "SegmentedObject",
    "LandmarkCandidate",
    "AssociationResult",
    "QualityParams",
    "segment_scan",
    "extract_detections",
    "extract_landmarks",
    "associate",
    "prefilter",
    "update_quality",
]

BEAM_COUNT = 361
BEAM_STEP = math.radians(0.5)
# Beams within this tolerance of max_range count as saturated (no return).
SATURATION_EPS = 1e-9


@dataclass(frozen=True)
class LaserScan:
    """One 361-beam range scan; beam i points at i * 0.5 degrees."""

    timestamp: float
    ranges: np.ndarray
    max_range: float = 80.0

    def __post_init__(self):
        r = np.asarray(self.ranges, dtype=float)
        if r.shape != (BEAM_COUNT,):
            raise ValueError(f"scan must have exactly {BEAM_COUNT} ranges, got {r.shape}")
        if np.any(r < 0) or np.any(r > self.max_range + SATURATION_EPS):
            raise ValueError("scan ranges must lie in [0, max_range]")
        object.__setattr__(self, "ranges", r)

    def beam_angle(self, i: int) -> float:
        return i * BEAM_STEP


@dataclass(frozen=True)
class SegmentedObject:
    """A contiguous run of beams with mutually close ranges."""

    first_beam: int
    ranges: np.ndarray
    saturated: bool = False

    @property
    def size(self) -> int:
        return len(self.ranges)

    @property
    def beams(self) -> range:
        return range(self.first_beam, self.first_beam + self.size)

    def centre(self) -> Observation:
        """Polar centre: mean beam angle and mean range."""
        mean_angle = (self.first_beam + 0.5 * (self.size - 1)) * BEAM_STEP
        return Observation(float(np.mean(self.ranges)), mean_angle)


@dataclass(frozen=True)
class LandmarkCandidate:
    """A tracked cluster centre with an integer quality score."""

    candidate_id: int
    centre_global: LandmarkPosition
    quality: int
    registered: bool
    last_seen: float


@dataclass(frozen=True)
class AssociationResult:
    pairs: tuple[tuple[int, int], ...]
    unmatched_new: tuple[int, ...]
    unmatched_prior: tuple[int, ...]
    # Distance evaluations performed; counted proxy for association cost.
    comparisons: int = 0


@dataclass(frozen=True)
class QualityParams:
    upgrade: int = 1
    degrade: int = 3
    set_threshold: int = 10
    clear_threshold: int = -20
    d_max: float = 0.3
    initial_quality: int = 1


def segment_scan(scan: LaserScan, gap_threshold: float = 0.25) -> list[SegmentedObject]:
    """Split a scan into contiguous segments of similar ranges.

    Consecutive beams stay in one segment while |r_j - r_{j-1}| is below
    the gap threshold and both beams have the same saturation status.
    Segment sizes always sum to 361.
    """
    r = scan.ranges
    sat = r >= scan.max_range - SATURATION_EPS
    boundaries = (np.abs(np.diff(r)) >= gap_threshold) | (sat[1:] != sat[:-1])
    starts = np.concatenate([[0], np.flatnonzero(boundaries) + 1, [BEAM_COUNT]])
    return [
        SegmentedObject(int(a), r[a:b].copy(), saturated=bool(sat[a]))
        for a, b in zip(starts[:-1], starts[1:])
    ]


def extract_detections(
    objs: list[SegmentedObject],
    robot: Pose,
    cfg: SensorNoiseConfig,
    min_pts: int = 3,
    max_pts: int = 8,
) -> list[tuple[Observation, LandmarkPosition]]:
    """Landmark-sized objects as (polar centre, global position) pairs.

    Size bounds are strict: with the defaults only sizes 4..7 qualify.
    Saturated segments never qualify.
    """
    if not min_pts < max_pts:
        raise ValueError("min_pts must be < max_pts")
    out = []
    for obj in objs:
        if obj.saturated or not (min_pts < obj.size < max_pts):
            continue
        centre = obj.centre()
        if centre.range <= 0:
            continue
        out.append((centre, inverse_observe(robot, centre, cfg)))
    return out


def extract_landmarks(
    objs: list[SegmentedObject],
    min_pts: int,
    max_pts: int,
    robot: Pose,
    cfg: SensorNoiseConfig,
) -> list[LandmarkPosition]:
    """Global positions of landmark-sized objects (see ``extract_detections``)."""
    return [pos for _, pos in extract_detections(objs, robot, cfg, min_pts, max_pts)]


def _positions_array(points: list[LandmarkPosition]) -> np.ndarray:
    if not points:
        return np.zeros((0, 2))
    return np.array([[p.lx, p.ly] for p in points])


def associate(
    new: list[LandmarkPosition],
    prior: list[LandmarkPosition],
    d_max: float = 0.3,
) -> AssociationResult:
    """Mutual nearest-neighbour matching with a Euclidean gate.

    A pair (i, j) is emitted iff prior j is the nearest prior to new i, new i
    is the nearest new to prior j, and their distance is at most ``d_max``.
    Exact distance ties break toward the lowest index, so results are
    deterministic.
    """
    a = _positions_array(new)
    b = _positions_array(prior)
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return AssociationResult((), tuple(range(m)), tuple(range(n)), comparisons=0)

    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    nearest_prior = np.argmin(d, axis=1)  # first occurrence == lowest index
    nearest_new = np.argmin(d, axis=0)

    pairs = []
    for i in range(m):
        j = int(nearest_prior[i])
        if int(nearest_new[j]) == i and d[i, j] <= d_max:
            pairs.append((i, j))
    matched_new = {i for i, _ in pairs}
    matched_prior = {j for _, j in pairs}
    return AssociationResult(
        pairs=tuple(pairs),
        unmatched_new=tuple(i for i in range(m) if i not in matched_new),
        unmatched_prior=tuple(j for j in range(n) if j not in matched_prior),
        comparisons=m * n,
    )


def prefilter(
    landmarks: list[LandmarkPosition], min_separation: float = 2.0
) -> list[LandmarkPosition]:
    """Drop every landmark that has a neighbour closer than ``min_separation``.

    Both members of a too-close pair are discarded; isolation is required of
    a usable landmark.
    """
    pts = _positions_array(landmarks)
    n = len(pts)
    if n <= 1:
        return list(landmarks)
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    np.fill_diagonal(d, np.inf)
    keep = np.min(d, axis=1) >= min_separation
    return [lm for lm, k in zip(landmarks, keep) if k]


def update_quality(
    tracker: list[LandmarkCandidate],
    new: list[LandmarkPosition],
    now: float,
    params: QualityParams = QualityParams(),
    next_candidate_id: int = 0,
) -> tuple[list[LandmarkCandidate], list[LandmarkCandidate], list[LandmarkCandidate], int]:
    """Score candidates against this scan's detections.

    Matched candidates upgrade by ``params.upgrade``; unmatched ones degrade
    by ``params.degrade``; unmatched detections enter as fresh candidates.
    Returns ``(tracker', promoted, cleared, next_candidate_id')`` where
    ``promoted`` are candidates that crossed ``set_threshold`` this call
    (flagged registered) and ``cleared`` fell below ``clear_threshold`` and
    were deleted.
    """
    result = associate(new, [c.centre_global for c in tracker], params.d_max)
    matched_candidates = {j: i for i, j in result.pairs}

    promoted: list[LandmarkCandidate] = []
    cleared: list[LandmarkCandidate] = []
    survivors: list[LandmarkCandidate] = []
    for j, cand in enumerate(tracker):
        if j in matched_candidates:
            cand = replace(cand, quality=cand.quality + params.upgrade, last_seen=now)
        else:
            cand = replace(cand, quality=cand.quality - params.degrade)
        if cand.quality < params.clear_threshold:
            cleared.append(cand)
            continue
        if not cand.registered and cand.quality > params.set_threshold:
            cand = replace(cand, registered=True)
            promoted.append(cand)
        survivors.append(cand)

    for i in result.unmatched_new:
        survivors.append(
            LandmarkCandidate(
                candidate_id=next_candidate_id,
                centre_global=new[i],
                quality=params.initial_quality,
                registered=False,
                last_seen=now,
            )
        )
        next_candidate_id += 1
    return survivors, promoted, cleared, next_candidate_id
