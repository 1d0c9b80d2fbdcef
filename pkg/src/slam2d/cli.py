"""Command-line entry point: simulate, run, compare.

Exit codes: 0 success, 1 usage error (bad flags or inconsistent options),
2 data error (unreadable/malformed inputs, failed validation).

``run`` replays one log through a configured estimator and writes
``run.csv`` (plus ``map.txt`` with final landmark estimates for SLAM).
With ``--runs N`` it instead simulates N seeded scenarios, runs the
pipeline on each concurrently, and reports only the merged metric table.
All outputs are deterministic for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .evaluation import (
    AlignmentError,
    load_runlog,
    metrics_row,
    save_runlog,
    table_from_rows,
)
from .filter import ObservationMode
from .ingest import LogParseError, load_log
from .models import MotionNoiseConfig
from .perception import QualityParams
from .pipeline import PipelineConfig, run_pipeline
from .simulator import (
    ScenarioConfig,
    default_scenario,
    load_map,
    load_truth,
    parse_scenario,
    save_log_files,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="slam2d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render a scenario to log + truth files")
    sim.add_argument("--scenario", help="scenario INI file (omit for the default)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output directory")

    run = sub.add_parser("run", help="replay a log through an estimator")
    run.add_argument("--log", help="sensor log file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument(
        "--estimator",
        choices=["dead_reckoning", "ekf_localisation", "ekf_slam"],
        default="ekf_slam",
    )
    run.add_argument("--obs-mode", choices=["range", "bearing", "both"], default="both")
    run.add_argument(
        "--source",
        choices=["scans", "obs", "none"],
        default=None,
        help="observation records to consume (default: scans for SLAM, obs for localisation)",
    )
    run.add_argument("--map", dest="map_file", help="known map for ekf_localisation")
    run.add_argument("--prefilter", choices=["on", "off"], default="on")
    run.add_argument("--quality", choices=["on", "off"], default="on")
    run.add_argument("--d-max", type=float, default=0.3)
    run.add_argument("--gap", type=float, default=0.25)
    run.add_argument("--size-min", type=int, default=3)
    run.add_argument("--size-max", type=int, default=8)
    run.add_argument("--set-thresh", type=int, default=10)
    run.add_argument("--clear-thresh", type=int, default=-20)
    run.add_argument("--upgrade", type=int, default=1)
    run.add_argument("--degrade", type=int, default=3)
    run.add_argument("--min-separation", type=float, default=2.0)
    run.add_argument(
        "--bias-window",
        type=float,
        default=None,
        help="seconds of stationary data for bias estimation (default: log header; 0 disables)",
    )
    run.add_argument("--sigma-v", type=float, default=0.5)
    run.add_argument("--sigma-omega-deg", type=float, default=2.0)
    run.add_argument("--sigma-range", type=float, default=0.2)
    run.add_argument("--sigma-bearing-deg", type=float, default=2.0)
    run.add_argument("--scan-sigma-range", type=float, default=0.05)
    run.add_argument("--scan-sigma-bearing-deg", type=float, default=0.2)
    run.add_argument("--label", default=None)
    run.add_argument("--seed", type=int, default=0, help="base seed for --runs batches")
    run.add_argument("--runs", type=int, default=None, help="Monte-Carlo batch size")
    run.add_argument("--scenario", help="scenario INI for --runs batches")

    cmp_ = sub.add_parser("compare", help="tabulate run logs against ground truth")
    cmp_.add_argument("runs", nargs="+", help="run log files")
    cmp_.add_argument("--truth", required=True, help="ground truth file")
    cmp_.add_argument("--out", default=None, help="directory for table.csv")

    return parser


def _pipeline_config(args) -> PipelineConfig:
    if args.estimator == "ekf_localisation" and not args.map_file and not args.runs:
        raise _UsageError("ekf_localisation requires --map")
    if args.estimator == "ekf_slam" and args.map_file:
        raise _UsageError("--map only applies to ekf_localisation")
    if args.runs is not None and args.runs < 1:
        raise _UsageError("--runs must be >= 1")

    estimator = "dr" if args.estimator == "dead_reckoning" else "ekf"
    if args.source is not None:
        source = args.source
    elif args.estimator == "ekf_localisation":
        source = "obs"
    elif args.estimator == "ekf_slam":
        source = "scans"
    else:
        source = "none"

    known_map = load_map(args.map_file) if args.map_file else None
    return PipelineConfig(
        estimator=estimator,
        source=source,
        mode=ObservationMode(args.obs_mode),
        known_map=known_map,
        motion_noise=MotionNoiseConfig(
            sigma_v=args.sigma_v, sigma_omega=math.radians(args.sigma_omega_deg)
        ),
        sigma_range=args.sigma_range,
        sigma_bearing=math.radians(args.sigma_bearing_deg),
        scan_sigma_range=args.scan_sigma_range,
        scan_sigma_bearing=math.radians(args.scan_sigma_bearing_deg),
        bias_window=args.bias_window,
        gap=args.gap,
        size_min=args.size_min,
        size_max=args.size_max,
        use_prefilter=args.prefilter == "on",
        min_separation=args.min_separation,
        quality=args.quality == "on",
        quality_params=QualityParams(
            upgrade=args.upgrade,
            degrade=args.degrade,
            set_threshold=args.set_thresh,
            clear_threshold=args.clear_thresh,
            d_max=args.d_max,
        ),
        d_max=args.d_max,
        label=args.label or args.estimator,
    )


def _cmd_simulate(args) -> int:
    from .simulator import simulate

    scenario = parse_scenario(args.scenario) if args.scenario else default_scenario()
    truth, log = simulate(scenario, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = save_log_files(log, truth, out)
    print(f"seed {args.seed}")
    for p in paths:
        print(p)
    return 0


def _batch_entry(packed) -> tuple:
    """Worker for --runs batches; returns one metric row."""
    scenario, cfg, seed, map_from_truth = packed
    from .simulator import simulate

    truth, log = simulate(scenario, seed)
    if map_from_truth:
        cfg = replace(cfg, known_map=truth.known_map())
    result = run_pipeline(log, replace(cfg, label=f"{cfg.label}-s{seed}"))
    return metrics_row(result.run, truth)


def _cmd_run_batch(args, cfg: PipelineConfig) -> int:
    scenario = parse_scenario(args.scenario) if args.scenario else default_scenario()
    map_from_truth = args.estimator == "ekf_localisation" and not args.map_file
    seeds = list(range(args.seed, args.seed + args.runs))
    jobs = [(scenario, cfg, seed, map_from_truth) for seed in seeds]
    if len(jobs) == 1:
        rows = [_batch_entry(jobs[0])]
    else:
        with ProcessPoolExecutor() as pool:
            rows = list(pool.map(_batch_entry, jobs))
    table = table_from_rows(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(table.to_csv(), encoding="ascii")
    print(f"seeds {seeds[0]}..{seeds[-1]}")
    print(table.to_text(), end="")
    print(out / "table.csv")
    return 0


def _cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    if args.runs is not None:
        return _cmd_run_batch(args, cfg)
    if not args.log:
        raise _UsageError("--log is required unless --runs is given")

    log = load_log(args.log)
    result = run_pipeline(log, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_path = out / "run.csv"
    save_runlog(result.run, run_path)
    print(run_path)
    if args.estimator == "ekf_slam" and result.final_state is not None:
        from .simulator import save_map

        s = result.final_state
        positions = {lid: s.landmark_position(lid) for lid in s.ids}
        covs = {lid: s.landmark_cov(lid) for lid in s.ids}
        map_path = out / "map.txt"
        save_map(positions, map_path, covariances=covs)
        print(map_path)
    return 0


def _cmd_compare(args) -> int:
    truth = load_truth(args.truth)
    rows = [metrics_row(load_runlog(path), truth) for path in args.runs]
    table = table_from_rows(rows)
    print(table.to_text(), end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.csv").write_text(table.to_csv(), encoding="ascii")
        print(out / "table.csv")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (OSError, LogParseError, AlignmentError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
