/**
 * Batch figure renderer.
 *
 * Usage:
 *     slam2d-viz --kind <trajectory|error|covariance|quality|map>
 *                --in <run.csv | map.txt> [--truth truth.txt]
 *                --out <figure.svg> [--force]
 *
 * `--in` is a run log for every kind except `map`, which reads a map
 * file.  `--truth` is required for trajectory and error figures and
 * optional for map overlays.  Existing outputs are only overwritten
 * with `--force`.  Exit codes: 0 ok, 1 usage error, 2 data error.
 */

import { existsSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import {
  FIGURE_KINDS,
  FigureKind,
  figureCovariance,
  figureError,
  figureMap,
  figureQuality,
  figureTrajectory,
} from "./figures.js";
import { DataError, loadMap, loadRunLog, loadTruth } from "./formats.js";

class UsageError extends Error {}

const USAGE =
  "usage: slam2d-viz --kind {trajectory,error,covariance,quality,map} " +
  "--in FILE [--truth FILE] --out FILE [--force]";

interface Args {
  kind: FigureKind;
  input: string;
  truth: string | null;
  out: string;
  force: boolean;
}

function parse(argv: string[]): Args {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        truth: { type: "string" },
        out: { type: "string" },
        force: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const kind = values.kind;
  if (!kind) throw new UsageError("--kind is required");
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`unknown kind "${kind}" (expected ${FIGURE_KINDS.join(", ")})`);
  }
  if (!values.in) throw new UsageError("--in is required");
  if (!values.out) throw new UsageError("--out is required");
  if ((kind === "trajectory" || kind === "error") && !values.truth) {
    throw new UsageError(`--truth is required for the ${kind} figure`);
  }
  return {
    kind: kind as FigureKind,
    input: values.in,
    truth: values.truth ?? null,
    out: values.out,
    force: values.force ?? false,
  };
}

export function render(args: Args): string {
  switch (args.kind) {
    case "trajectory":
      return figureTrajectory(loadRunLog(args.input), loadTruth(args.truth!));
    case "error":
      return figureError(loadRunLog(args.input), loadTruth(args.truth!));
    case "covariance":
      return figureCovariance(loadRunLog(args.input));
    case "quality":
      return figureQuality(loadRunLog(args.input));
    case "map":
      return figureMap(loadMap(args.input), args.truth ? loadTruth(args.truth) : null);
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parse(argv);
    if (existsSync(args.out) && !args.force) {
      throw new UsageError(`output ${args.out} exists; pass --force to overwrite`);
    }
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      console.error(USAGE);
      return 1;
    }
    throw err;
  }
  try {
    const svg = render(args);
    writeFileSync(args.out, svg, "utf8");
  } catch (err) {
    if (err instanceof DataError || (err as NodeJS.ErrnoException).code !== undefined) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
  console.log(args.out);
  return 0;
}
