"""Sensor log parsing, bias removal and dead-reckoning integration.

Log format (one record per line, decimal ASCII, LF terminators)::

    # slamlog v1 stationary_until=<seconds> [start=<x>:<y>:<theta>] [max_range=<m>]
    S <t> <v>                     speed (m/s)
    G <t> <wx> <wy> <wz>          gyro rates (rad/s)
    L <t> <r0> ... <r360>               laser scan (361 ranges, meters)
    O <t> <id> <range> <bearing>  known-association observation

``O`` records are emitted by the simulator when data association is assumed
known, so filter behaviour can be studied in isolation from perception.
``start`` carries the initial pose when the producer knows it; ``max_range``
is the laser saturation range shared by every scan in the file (default 80).

Floats are serialized with ``repr`` so parse(serialize(x)) is exact.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .models import ControlInput, Pose, wrap_angle
from .perception import BEAM_COUNT, LaserScan

__all__ = [
    "SPEED",
    "GYRO",
    "SCAN",
    "OBS",
    "SensorRecord",
    "LogFile",
    "BiasEstimate",
    "LogParseError",
    "parse_log",
    "serialize_log",
    "load_log",
    "save_log",
    "estimate_bias",
    "debias",
    "dead_reckon",
]

HEADER_PREFIX = "# slamlog v1"
DEFAULT_MAX_RANGE = 80.0

SPEED = "speed"
GYRO = "gyro"
SCAN = "scan"
OBS = "obs"


class LogParseError(ValueError):
    """Malformed log input; message carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class SensorRecord:
    """One timestamped sensor sample.

    ``payload`` depends on ``kind``: float speed for ``speed``; (wx, wy, wz)
    tuple for ``gyro``; ``LaserScan`` for ``scan``; (id, range, bearing) for
    ``obs``.
    """

    timestamp: float
    kind: str
    payload: object

    def speed(self) -> float:
        assert self.kind == SPEED
        return self.payload

    def gyro_z(self) -> float:
        assert self.kind == GYRO
        return self.payload[2]

    def scan(self) -> LaserScan:
        assert self.kind == SCAN
        return self.payload


@dataclass(frozen=True)
class LogFile:
    """Parsed log: header metadata plus time-ordered records."""

    records: list[SensorRecord]
    stationary_until: float = 0.0
    start: Union[Pose, None] = None
    max_range: float = DEFAULT_MAX_RANGE


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_floats(parts: list[str], line_no: int) -> list[float]:
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise LogParseError(line_no, f"bad number: {e}") from None


def parse_log(stream: Union[str, bytes, Iterable[str]]) -> LogFile:
    """Parse a log stream into time-ordered records.

    Accepts a string, bytes, or an iterable of lines (e.g. an open file).
    Records are stably sorted by timestamp; malformed lines raise
    ``LogParseError`` naming the line.
    """
    if isinstance(stream, bytes):
        stream = stream.decode("ascii")
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    records: list[SensorRecord] = []
    stationary_until = 0.0
    start: Union[Pose, None] = None
    max_range = DEFAULT_MAX_RANGE
    last_t: dict[str, float] = {}

    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            if line_no == 1:
                if not line.startswith(HEADER_PREFIX):
                    raise LogParseError(line_no, f"expected header {HEADER_PREFIX!r}")
                for token in line[len(HEADER_PREFIX):].split():
                    key, _, value = token.partition("=")
                    if key == "stationary_until":
                        stationary_until = _parse_floats([value], line_no)[0]
                    elif key == "start":
                        xyz = _parse_floats(value.split(":"), line_no)
                        if len(xyz) != 3:
                            raise LogParseError(line_no, "start needs x:y:theta")
                        start = Pose(*xyz)
                    elif key == "max_range":
                        max_range = _parse_floats([value], line_no)[0]
                        if not (math.isfinite(max_range) and max_range > 0):
                            raise LogParseError(line_no, "max_range must be positive")
                    else:
                        raise LogParseError(line_no, f"unknown header token {key!r}")
            continue

        parts = line.split()
        tag = parts[0]
        if tag == "S":
            if len(parts) != 3:
                raise LogParseError(line_no, f"S record needs 2 fields, got {len(parts) - 1}")
            t, v = _parse_floats(parts[1:], line_no)
            rec = SensorRecord(t, SPEED, v)
        elif tag == "G":
            if len(parts) != 5:
                raise LogParseError(line_no, f"G record needs 4 fields, got {len(parts) - 1}")
            t, wx, wy, wz = _parse_floats(parts[1:], line_no)
            rec = SensorRecord(t, GYRO, (wx, wy, wz))
        elif tag == "L":
            if len(parts) != 2 + BEAM_COUNT:
                raise LogParseError(
                    line_no,
                    f"L record needs a timestamp plus {BEAM_COUNT} ranges, got {len(parts) - 2}",
                )
            vals = _parse_floats(parts[1:], line_no)
            t = vals[0]
            try:
                scan = LaserScan(t, np.array(vals[1:]), max_range=max_range)
            except ValueError as e:
                raise LogParseError(line_no, str(e)) from None
            rec = SensorRecord(t, SCAN, scan)
        elif tag == "O":
            if len(parts) != 5:
                raise LogParseError(line_no, f"O record needs 4 fields, got {len(parts) - 1}")
            t, lid, rng, bearing = _parse_floats(parts[1:], line_no)
            if lid != int(lid):
                raise LogParseError(line_no, f"landmark id must be an integer, got {lid}")
            rec = SensorRecord(t, OBS, (int(lid), rng, bearing))
        else:
            raise LogParseError(line_no, f"unknown record tag {tag!r}")

        if not math.isfinite(rec.timestamp):
            raise LogParseError(line_no, "timestamp must be finite")
        prev = last_t.get(rec.kind)
        if prev is not None and rec.timestamp < prev:
            raise LogParseError(
                line_no, f"{rec.kind} timestamps must be non-decreasing ({rec.timestamp} < {prev})"
            )
        last_t[rec.kind] = rec.timestamp
        records.append(rec)

    records.sort(key=lambda r: r.timestamp)  # stable: interleaves streams
    return LogFile(
        records=records,
        stationary_until=stationary_until,
        start=start,
        max_range=max_range,
    )


def serialize_log(log: LogFile) -> str:
    """Render a log back to its line-oriented text form."""
    out = [HEADER_PREFIX + f" stationary_until={_fmt(log.stationary_until)}"]
    if log.start is not None:
        out[0] += f" start={_fmt(log.start.x)}:{_fmt(log.start.y)}:{_fmt(log.start.theta)}"
    if log.max_range != DEFAULT_MAX_RANGE:
        out[0] += f" max_range={_fmt(log.max_range)}"
    for rec in log.records:
        t = _fmt(rec.timestamp)
        if rec.kind == SPEED:
            out.append(f"S {t} {_fmt(rec.payload)}")
        elif rec.kind == GYRO:
            wx, wy, wz = rec.payload
            out.append(f"G {t} {_fmt(wx)} {_fmt(wy)} {_fmt(wz)}")
        elif rec.kind == SCAN:
            scan = rec.payload
            if scan.max_range != log.max_range:
                raise ValueError(
                    f"scan at t={rec.timestamp} has max_range {scan.max_range}, "
                    f"log declares {log.max_range}"
                )
            ranges = " ".join(_fmt(r) for r in scan.ranges)
            out.append(f"L {t} {ranges}")
        elif rec.kind == OBS:
            lid, rng, bearing = rec.payload
            out.append(f"O {t} {lid} {_fmt(rng)} {_fmt(bearing)}")
        else:
            raise ValueError(f"unknown record kind {rec.kind!r}")
    return "\n".join(out) + "\n"


def load_log(path) -> LogFile:
    with open(path, "r", encoding="ascii") as f:
        return parse_log(f)


def save_log(log: LogFile, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(serialize_log(log))


@dataclass(frozen=True)
class BiasEstimate:
    """Constant sensor biases estimated over a stationary window."""

    speed_bias: float
    gyro_z_bias: float
    window: float

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("bias window must be > 0")


def estimate_bias(records: list[SensorRecord], window: float = 5.0) -> BiasEstimate:
    """Mean speed and gyro-z over the first ``window`` seconds of the log.

    The window is half-open, [t0, t0 + window): a sample exactly at the
    window edge belongs to the moving phase, not the calibration data.
    The caller asserts the robot is stationary over the window.  A stream
    with no samples in the window contributes zero bias; if neither stream
    has samples the window is empty and an error is raised.
    """
    if not window > 0:
        raise ValueError("bias window must be > 0")
    if not records:
        raise ValueError("no records to estimate bias from")
    t0 = records[0].timestamp
    speeds = [r.speed() for r in records if r.kind == SPEED and r.timestamp < t0 + window]
    gyros = [r.gyro_z() for r in records if r.kind == GYRO and r.timestamp < t0 + window]
    if not speeds and not gyros:
        raise ValueError(f"no speed or gyro samples in the first {window} s")
    return BiasEstimate(
        speed_bias=float(np.mean(speeds)) if speeds else 0.0,
        gyro_z_bias=float(np.mean(gyros)) if gyros else 0.0,
        window=window,
    )


def debias(records: list[SensorRecord], b: BiasEstimate) -> list[SensorRecord]:
    """Shift speed and gyro-z payloads by the estimated biases; scans untouched."""
    out = []
    for r in records:
        if r.kind == SPEED:
            out.append(SensorRecord(r.timestamp, SPEED, r.payload - b.speed_bias))
        elif r.kind == GYRO:
            wx, wy, wz = r.payload
            out.append(SensorRecord(r.timestamp, GYRO, (wx, wy, wz - b.gyro_z_bias)))
        else:
            out.append(r)
    return out


def dead_reckon(p0: Pose, records: list[SensorRecord]) -> list[tuple[float, Pose]]:
    """Integrate speed/gyro-z records with zero-order hold, no correction.

    Controls sampled at t_k are held over [t_k, t_{k+1}); a step is taken at
    every control timestamp.  Returns (timestamp, pose) at each control
    record; the speed before the first sample of either stream is 0.
    """
    controls = [r for r in records if r.kind in (SPEED, GYRO)]
    if not controls:
        raise ValueError("no speed or gyro records to integrate")

    poses: list[tuple[float, Pose]] = []
    pose = p0
    t_prev = controls[0].timestamp
    v, w = 0.0, 0.0
    for rec in controls:
        dt = rec.timestamp - t_prev
        if dt > 0:
            pose = Pose(
                pose.x + dt * v * math.cos(pose.theta),
                pose.y + dt * v * math.sin(pose.theta),
                wrap_angle(pose.theta + dt * w),
            )
            t_prev = rec.timestamp
        if rec.kind == SPEED:
            v = rec.speed()
        else:
            w = rec.gyro_z()
        if poses and poses[-1][0] == rec.timestamp:
            poses[-1] = (rec.timestamp, pose)
        else:
            poses.append((rec.timestamp, pose))
    return poses
