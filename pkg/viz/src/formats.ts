/**
 * Parsers for the three slam2d artifact formats.
 *
 * Run logs (`run.csv`):
 *     # slamrun v1 label=<name>
 *     t,x,y,theta,cov_xx,cov_yy,cov_tt,n_landmarks,assoc_cum,lm,q
 * `lm` and `q` hold `|`-separated `id:value` pairs; covariance cells are
 * empty for estimators that do not report one (dead reckoning).
 *
 * Truth files (`truth.txt`): `# slamtruth v1`, `M <id> <x> <y>` landmark
 * lines and `P <t> <x> <y> <theta>` pose lines.
 *
 * Map files (`map.txt`): `# slammap v1`, `M <id> <x> <y>` optionally
 * followed by the row-major 2x2 position covariance.
 */

import { readFileSync } from "node:fs";

/** Malformed or missing input data; the message names the offending field. */
export class DataError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DataError";
  }
}

export interface RunRow {
  t: number;
  x: number;
  y: number;
  theta: number;
  covXx: number | null;
  covYy: number | null;
  covTt: number | null;
  nLandmarks: number;
  assocCum: number;
  /** landmark id -> covariance trace, present from registration onward */
  landmarkTraces: Map<number, number>;
  /** candidate id -> quality score */
  qualities: Map<number, number>;
}

export interface RunLog {
  label: string;
  rows: RunRow[];
}

export interface TruthPose {
  t: number;
  x: number;
  y: number;
  theta: number;
}

export interface Truth {
  landmarks: Map<number, { x: number; y: number }>;
  poses: TruthPose[];
}

export interface MapLandmark {
  id: number;
  x: number;
  y: number;
  /** [pxx, pxy, pyx, pyy] when the producer reported one */
  cov: [number, number, number, number] | null;
}

export const RUN_COLUMNS = [
  "t",
  "x",
  "y",
  "theta",
  "cov_xx",
  "cov_yy",
  "cov_tt",
  "n_landmarks",
  "assoc_cum",
  "lm",
  "q",
] as const;

function parseNumber(cell: string, field: string, line: number): number {
  const v = Number(cell);
  if (cell === "" || !Number.isFinite(v)) {
    throw new DataError(`line ${line}: field "${field}" is not a number: "${cell}"`);
  }
  return v;
}

function parsePairs(cell: string, field: string, line: number): Map<number, number> {
  const out = new Map<number, number>();
  if (cell === "") return out;
  for (const pair of cell.split("|")) {
    const sep = pair.indexOf(":");
    if (sep < 0) {
      throw new DataError(`line ${line}: field "${field}" has malformed pair "${pair}"`);
    }
    const id = Number(pair.slice(0, sep));
    const value = Number(pair.slice(sep + 1));
    if (!Number.isInteger(id) || !Number.isFinite(value)) {
      throw new DataError(`line ${line}: field "${field}" has malformed pair "${pair}"`);
    }
    out.set(id, value);
  }
  return out;
}

export function parseRunLog(text: string): RunLog {
  const lines = text.split("\n");
  const header = lines[0] ?? "";
  const m = header.match(/^# slamrun v1 label=(.*)$/);
  if (!m) throw new DataError(`line 1: expected "# slamrun v1 label=..." header`);
  const label = m[1]!;

  const columnLine = (lines[1] ?? "").trim();
  const columns = columnLine === "" ? [] : columnLine.split(",");
  for (const wanted of RUN_COLUMNS) {
    if (!columns.includes(wanted)) {
      throw new DataError(`run log is missing column "${wanted}"`);
    }
  }
  const idx = new Map(columns.map((c, i) => [c, i]));
  const col = (cells: string[], name: string): string =>
    cells[idx.get(name)!] ?? "";

  const rows: RunRow[] = [];
  for (let i = 2; i < lines.length; i++) {
    const raw = lines[i]!.trim();
    if (raw === "") continue;
    const cells = raw.split(",");
    if (cells.length !== columns.length) {
      throw new DataError(
        `line ${i + 1}: expected ${columns.length} fields, got ${cells.length}`,
      );
    }
    const optional = (name: string): number | null =>
      col(cells, name) === "" ? null : parseNumber(col(cells, name), name, i + 1);
    rows.push({
      t: parseNumber(col(cells, "t"), "t", i + 1),
      x: parseNumber(col(cells, "x"), "x", i + 1),
      y: parseNumber(col(cells, "y"), "y", i + 1),
      theta: parseNumber(col(cells, "theta"), "theta", i + 1),
      covXx: optional("cov_xx"),
      covYy: optional("cov_yy"),
      covTt: optional("cov_tt"),
      nLandmarks: parseNumber(col(cells, "n_landmarks"), "n_landmarks", i + 1),
      assocCum: parseNumber(col(cells, "assoc_cum"), "assoc_cum", i + 1),
      landmarkTraces: parsePairs(col(cells, "lm"), "lm", i + 1),
      qualities: parsePairs(col(cells, "q"), "q", i + 1),
    });
  }
  if (rows.length === 0) throw new DataError("run log has no data rows");
  return { label, rows };
}

export function parseTruth(text: string): Truth {
  const lines = text.split("\n");
  if (!(lines[0] ?? "").startsWith("# slamtruth v1")) {
    throw new DataError(`line 1: expected "# slamtruth v1" header`);
  }
  const landmarks = new Map<number, { x: number; y: number }>();
  const poses: TruthPose[] = [];
  for (let i = 1; i < lines.length; i++) {
    const raw = lines[i]!.trim();
    if (raw === "" || raw.startsWith("#")) continue;
    const parts = raw.split(/\s+/);
    if (parts[0] === "M" && parts.length === 4) {
      landmarks.set(parseNumber(parts[1]!, "landmark id", i + 1), {
        x: parseNumber(parts[2]!, "landmark x", i + 1),
        y: parseNumber(parts[3]!, "landmark y", i + 1),
      });
    } else if (parts[0] === "P" && parts.length === 5) {
      poses.push({
        t: parseNumber(parts[1]!, "pose t", i + 1),
        x: parseNumber(parts[2]!, "pose x", i + 1),
        y: parseNumber(parts[3]!, "pose y", i + 1),
        theta: parseNumber(parts[4]!, "pose theta", i + 1),
      });
    } else {
      throw new DataError(`line ${i + 1}: expected "M <id> <x> <y>" or "P <t> <x> <y> <theta>"`);
    }
  }
  if (poses.length === 0) throw new DataError("truth file has no pose lines");
  return { landmarks, poses };
}

export function parseMap(text: string): MapLandmark[] {
  const lines = text.split("\n");
  if (!(lines[0] ?? "").startsWith("# slammap v1")) {
    throw new DataError(`line 1: expected "# slammap v1" header`);
  }
  const out: MapLandmark[] = [];
  for (let i = 1; i < lines.length; i++) {
    const raw = lines[i]!.trim();
    if (raw === "" || raw.startsWith("#")) continue;
    const parts = raw.split(/\s+/);
    if (parts[0] !== "M" || (parts.length !== 4 && parts.length !== 8)) {
      throw new DataError(
        `line ${i + 1}: expected "M <id> <x> <y>" with optional 2x2 covariance`,
      );
    }
    const nums = parts.slice(1).map((p, j) => parseNumber(p, `map field ${j + 1}`, i + 1));
    out.push({
      id: nums[0]!,
      x: nums[1]!,
      y: nums[2]!,
      cov: parts.length === 8 ? [nums[3]!, nums[4]!, nums[5]!, nums[6]!] : null,
    });
  }
  if (out.length === 0) throw new DataError("map file has no landmark lines");
  return out;
}

export function loadRunLog(path: string): RunLog {
  return parseRunLog(readFileSync(path, "utf8"));
}

export function loadTruth(path: string): Truth {
  return parseTruth(readFileSync(path, "utf8"));
}

export function loadMap(path: string): MapLandmark[] {
  return parseMap(readFileSync(path, "utf8"));
}
