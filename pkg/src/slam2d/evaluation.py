"""Run logs and accuracy/consistency metrics.

A run log is the per-timestep output of an estimator run: pose estimate,
covariance diagonal (absent for dead reckoning), map size, cumulative
association work, per-landmark covariance traces and candidate qualities.

Serialized form::

    # slamrun v1 label=<label>
    t,x,y,theta,cov_xx,cov_yy,cov_tt,n_landmarks,assoc_cum,lm,q
    0.0,0.0,0.0,1.57,...,2,14,0:0.04|1:0.039,5:3|6:-2

``lm`` and ``q`` are ``|``-separated ``key:value`` pairs (landmark id to
covariance trace, candidate id to quality score); both may be empty.
Floats use ``repr`` so parse(serialize(x)) is exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .models import Pose, wrap_angle
from .simulator import GroundTruth

__all__ = [
    "RunRow",
    "RunLog",
    "RmseResult",
    "ConsistencyResult",
    "CompareTable",
    "AlignmentError",
    "parse_runlog",
    "serialize_runlog",
    "load_runlog",
    "save_runlog",
    "rmse",
    "consistency",
    "metrics_row",
    "table_from_rows",
    "compare",
]

RUNLOG_HEADER = "# slamrun v1"
_COLUMNS = "t,x,y,theta,cov_xx,cov_yy,cov_tt,n_landmarks,assoc_cum,lm,q"


class AlignmentError(ValueError):
    """Run log and ground truth do not share the compared timestamps."""


@dataclass(frozen=True)
class RunRow:
    """Estimator output at one timestamp."""

    t: float
    pose: Pose
    cov_diag: Optional[tuple[float, float, float]]
    n_landmarks: int = 0
    assoc_cum: int = 0
    landmark_traces: dict[int, float] = field(default_factory=dict)
    qualities: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class RunLog:
    """A labelled sequence of per-timestep estimator rows."""

    rows: list[RunRow]
    label: str = "run"

    def timestamps(self) -> list[float]:
        return [r.t for r in self.rows]

    def has_covariance(self) -> bool:
        return any(r.cov_diag is not None for r in self.rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_pairs(d: dict[int, float]) -> str:
    return "|".join(f"{k}:{_fmt(v)}" for k, v in sorted(d.items()))


def _parse_pairs(s: str, cast, line_no: int) -> dict:
    if not s:
        return {}
    out = {}
    for item in s.split("|"):
        key, _, value = item.partition(":")
        try:
            out[int(key)] = cast(value)
        except ValueError:
            raise ValueError(f"line {line_no}: bad key:value pair {item!r}") from None
    return out


def serialize_runlog(run: RunLog) -> str:
    lines = [f"{RUNLOG_HEADER} label={run.label}", _COLUMNS]
    for r in run.rows:
        cov = ("", "", "")
        if r.cov_diag is not None:
            cov = tuple(_fmt(c) for c in r.cov_diag)
        lines.append(
            ",".join(
                [
                    _fmt(r.t),
                    _fmt(r.pose.x),
                    _fmt(r.pose.y),
                    _fmt(r.pose.theta),
                    *cov,
                    str(r.n_landmarks),
                    str(r.assoc_cum),
                    _fmt_pairs(r.landmark_traces),
                    "|".join(f"{k}:{v}" for k, v in sorted(r.qualities.items())),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def parse_runlog(text: Union[str, Iterable[str]]) -> RunLog:
    if isinstance(text, str):
        text = text.splitlines()
    label = "run"
    rows: list[RunRow] = []
    saw_header = False
    for line_no, raw in enumerate(text, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            if not line.startswith(RUNLOG_HEADER):
                raise ValueError(f"line {line_no}: expected {RUNLOG_HEADER!r} header")
            for token in line[len(RUNLOG_HEADER):].split():
                key, _, value = token.partition("=")
                if key == "label":
                    label = value
            saw_header = True
            continue
        if line == _COLUMNS:
            continue
        if not saw_header:
            raise ValueError(f"line {line_no}: missing {RUNLOG_HEADER!r} header")
        parts = line.split(",")
        if len(parts) != 11:
            raise ValueError(f"line {line_no}: expected 11 fields, got {len(parts)}")
        t, x, y, theta = (float(p) for p in parts[:4])
        cov = None
        if parts[4] or parts[5] or parts[6]:
            cov = (float(parts[4]), float(parts[5]), float(parts[6]))
        rows.append(
            RunRow(
                t=t,
                pose=Pose(x, y, theta),
                cov_diag=cov,
                n_landmarks=int(parts[7]),
                assoc_cum=int(parts[8]),
                landmark_traces=_parse_pairs(parts[9], float, line_no),
                qualities=_parse_pairs(parts[10], int, line_no),
            )
        )
    return RunLog(rows=rows, label=label)


def load_runlog(path) -> RunLog:
    with open(path, "r", encoding="ascii") as f:
        return parse_runlog(f)


def save_runlog(run: RunLog, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(serialize_runlog(run))


@dataclass(frozen=True)
class RmseResult:
    """Root-mean-square pose error; heading in degrees on wrapped residuals."""

    x: float
    y: float
    position: float
    heading_deg: float
    n: int


def _aligned_errors(run: RunLog, truth: GroundTruth) -> np.ndarray:
    truth_by_t = {t: p for t, p in truth.poses}
    errs = []
    for row in run.rows:
        true_pose = truth_by_t.get(row.t)
        if true_pose is None:
            raise AlignmentError(f"no ground-truth pose at t={row.t}")
        errs.append(
            [
                row.pose.x - true_pose.x,
                row.pose.y - true_pose.y,
                wrap_angle(row.pose.theta - true_pose.theta),
            ]
        )
    if not errs:
        raise AlignmentError("run log has no rows")
    return np.array(errs)


def rmse(run: RunLog, truth: GroundTruth) -> RmseResult:
    """Pose RMSE of a run against ground truth, aligned by exact timestamp."""
    e = _aligned_errors(run, truth)
    ms = np.mean(e**2, axis=0)
    return RmseResult(
        x=float(np.sqrt(ms[0])),
        y=float(np.sqrt(ms[1])),
        position=float(np.sqrt(ms[0] + ms[1])),
        heading_deg=math.degrees(float(np.sqrt(ms[2]))),
        n=e.shape[0],
    )


@dataclass(frozen=True)
class ConsistencyResult:
    """Fractions of timesteps whose error lies within the reported 3-sigma."""

    x: float
    y: float
    joint: float
    n: int


def consistency(run: RunLog, truth: GroundTruth) -> ConsistencyResult:
    """3-sigma containment of x/y errors using the run's own covariance."""
    truth_by_t = {t: p for t, p in truth.poses}
    ok_x = ok_y = ok_joint = n = 0
    for row in run.rows:
        if row.cov_diag is None:
            continue
        true_pose = truth_by_t.get(row.t)
        if true_pose is None:
            raise AlignmentError(f"no ground-truth pose at t={row.t}")
        ex = abs(row.pose.x - true_pose.x)
        ey = abs(row.pose.y - true_pose.y)
        in_x = ex <= 3.0 * math.sqrt(max(row.cov_diag[0], 0.0))
        in_y = ey <= 3.0 * math.sqrt(max(row.cov_diag[1], 0.0))
        ok_x += in_x
        ok_y += in_y
        ok_joint += in_x and in_y
        n += 1
    if n == 0:
        raise ValueError("run log has no covariance rows to assess")
    return ConsistencyResult(x=ok_x / n, y=ok_y / n, joint=ok_joint / n, n=n)


@dataclass(frozen=True)
class CompareTable:
    """Per-run metric rows plus a mean row when several runs are compared."""

    headers: tuple[str, ...]
    rows: list[tuple]

    def to_text(self) -> str:
        cells = [self.headers] + [
            tuple(c if isinstance(c, str) else f"{c:.4f}" for c in row) for row in self.rows
        ]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.headers))]
        lines = []
        for i, row in enumerate(cells):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = [",".join(self.headers)]
        for row in self.rows:
            lines.append(",".join(c if isinstance(c, str) else repr(float(c)) for c in row))
        return "\n".join(lines) + "\n"


TABLE_HEADERS = (
    "label",
    "rmse_x",
    "rmse_y",
    "rmse_pos",
    "rmse_heading_deg",
    "within_3sigma",
    "landmarks",
    "assoc",
)


def metrics_row(run: RunLog, truth: GroundTruth) -> tuple:
    """One comparison-table row: label plus the seven summary metrics."""
    r = rmse(run, truth)
    if run.has_covariance():
        c = consistency(run, truth).joint
    else:
        c = float("nan")
    last = run.rows[-1]
    return (
        run.label,
        r.x,
        r.y,
        r.position,
        r.heading_deg,
        c,
        float(last.n_landmarks),
        float(last.assoc_cum),
    )


def table_from_rows(rows: list[tuple]) -> CompareTable:
    """Assemble a table from metric rows, appending a mean row when several."""
    if not rows:
        raise ValueError("nothing to compare")
    rows = list(rows)
    if len(rows) > 1:
        # nanmean of an all-NaN column (e.g. consistency for dead reckoning)
        # should stay NaN silently rather than warn.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(np.array([r[1:] for r in rows], dtype=float), axis=0)
        rows.append(("mean", *(float(v) for v in mean)))
    return CompareTable(headers=TABLE_HEADERS, rows=rows)


def compare(entries: list[tuple[RunLog, GroundTruth]]) -> CompareTable:
    """Tabulate RMSE/consistency/map-size metrics for one or more runs."""
    return table_from_rows([metrics_row(run, truth) for run, truth in entries])
