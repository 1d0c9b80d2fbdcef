/**
 * The five figure kinds: trajectory, error, covariance, quality, map.
 *
 * Each renderer takes parsed artifacts and returns a complete SVG
 * document string; nothing here touches the filesystem.
 */

import { DataError, MapLandmark, RunLog, RunRow, Truth } from "./formats.js";
import { Frame, covarianceEllipse, document, legend, text } from "./svg.js";

export const FIGURE_KINDS = ["trajectory", "error", "covariance", "quality", "map"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

const WIDTH = 800;
const HEIGHT = 600;

const TRUTH_COLOR = "#999999";
const ESTIMATE_COLOR = "#1f77b4";
const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#17becf",
];

const wrapAngle = (a: number): number => {
  let w = a % (2 * Math.PI);
  if (w <= -Math.PI) w += 2 * Math.PI;
  if (w > Math.PI) w -= 2 * Math.PI;
  return w;
};

const hasCovariance = (rows: RunRow[]): boolean =>
  rows.some((r) => r.covXx !== null && r.covYy !== null && r.covTt !== null);

/** Truth path, estimated path, landmark crosses and pose 3-sigma ellipses. */
export function figureTrajectory(run: RunLog, truth: Truth): string {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const p of truth.poses) xs.push(p.x), ys.push(p.y);
  for (const r of run.rows) xs.push(r.x), ys.push(r.y);
  for (const l of truth.landmarks.values()) xs.push(l.x), ys.push(l.y);

  const frame = Frame.fit(xs, ys, 60, 50, WIDTH - 100, HEIGHT - 110, { square: true });
  const body: string[] = [frame.axes("x (m)", "y (m)")];

  body.push(
    frame.polyline(
      truth.poses.map((p) => [p.x, p.y]),
      { stroke: TRUTH_COLOR, "stroke-width": 2 },
    ),
  );
  body.push(
    frame.polyline(
      run.rows.map((r) => [r.x, r.y]),
      { stroke: ESTIMATE_COLOR, "stroke-width": 1.5 },
    ),
  );
  for (const l of truth.landmarks.values()) {
    body.push(frame.cross(l.x, l.y, 4, { stroke: "#222", "stroke-width": 1.2 }));
  }

  // Pose uncertainty along the path; run logs carry variances only, so the
  // ellipses are axis-aligned.
  if (hasCovariance(run.rows)) {
    const step = Math.max(1, Math.floor(run.rows.length / 24));
    for (let i = 0; i < run.rows.length; i += step) {
      const r = run.rows[i]!;
      if (r.covXx === null || r.covYy === null) continue;
      body.push(
        frame.ellipse(covarianceEllipse(r.x, r.y, r.covXx, 0, r.covYy), {
          stroke: ESTIMATE_COLOR,
          "stroke-width": 0.8,
          opacity: 0.6,
        }),
      );
    }
  }

  const start = truth.poses[0]!;
  body.push(frame.dot(start.x, start.y, 4, { fill: "#222" }));
  body.push(
    legend(70, 64, [
      { label: "ground truth", color: TRUTH_COLOR },
      { label: `estimate (${run.label})`, color: ESTIMATE_COLOR },
      { label: "landmarks (truth) +, pose 3σ ellipses", color: "#222" },
    ]),
  );
  return document(WIDTH, HEIGHT, `Trajectory — ${run.label}`, body);
}

interface AlignedRow {
  t: number;
  ex: number;
  ey: number;
  eh: number;
  row: RunRow;
}

function alignToTruth(run: RunLog, truth: Truth): AlignedRow[] {
  const byT = new Map(truth.poses.map((p) => [p.t, p]));
  const aligned: AlignedRow[] = [];
  for (const r of run.rows) {
    const p = byT.get(r.t);
    if (!p) continue;
    aligned.push({
      t: r.t,
      ex: r.x - p.x,
      ey: r.y - p.y,
      eh: (wrapAngle(r.theta - p.theta) * 180) / Math.PI,
      row: r,
    });
  }
  if (aligned.length < 2) {
    throw new DataError(
      `run and truth share ${aligned.length} timestamps; need at least 2 to plot errors`,
    );
  }
  return aligned;
}

/** Per-axis estimation error over time with 3-sigma envelopes. */
export function figureError(run: RunLog, truth: Truth): string {
  const aligned = alignToTruth(run, truth);
  const withCov = hasCovariance(run.rows);

  const panels: Array<{
    label: string;
    values: (a: AlignedRow) => number;
    sigma: ((a: AlignedRow) => number | null) | null;
  }> = [
    {
      label: "x error (m)",
      values: (a) => a.ex,
      sigma: withCov ? (a) => (a.row.covXx === null ? null : Math.sqrt(a.row.covXx)) : null,
    },
    {
      label: "y error (m)",
      values: (a) => a.ey,
      sigma: withCov ? (a) => (a.row.covYy === null ? null : Math.sqrt(a.row.covYy)) : null,
    },
    {
      label: "heading error (deg)",
      values: (a) => a.eh,
      sigma: withCov
        ? (a) => (a.row.covTt === null ? null : (Math.sqrt(a.row.covTt) * 180) / Math.PI)
        : null,
    },
  ];

  const panelH = (HEIGHT - 120) / 3;
  const body: string[] = [];
  panels.forEach((panel, i) => {
    const top = 50 + i * (panelH + 24);
    const ts = aligned.map((a) => a.t);
    const vs = aligned.map(panel.values);
    const envelope: Array<[number, number]> = [];
    const envelopeLo: Array<[number, number]> = [];
    if (panel.sigma) {
      for (const a of aligned) {
        const s = panel.sigma(a);
        if (s !== null) envelope.push([a.t, 3 * s]), envelopeLo.push([a.t, -3 * s]);
      }
    }
    const frame = Frame.fit(
      ts,
      [...vs, ...envelope.map(([, v]) => v), ...envelopeLo.map(([, v]) => v), 0],
      60,
      top,
      WIDTH - 100,
      panelH,
    );
    body.push(frame.axes("t (s)", panel.label));
    body.push(
      frame.polyline(
        [
          [frame.x0, 0],
          [frame.x1, 0],
        ],
        { stroke: "#ccc", "stroke-width": 1 },
      ),
    );
    body.push(
      frame.polyline(
        aligned.map((a) => [a.t, panel.values(a)]),
        { stroke: ESTIMATE_COLOR, "stroke-width": 1.2 },
      ),
    );
    for (const env of [envelope, envelopeLo]) {
      if (env.length > 1) {
        body.push(
          frame.polyline(env, {
            stroke: "#d62728",
            "stroke-width": 1,
            "stroke-dasharray": "4 3",
          }),
        );
      }
    }
  });
  body.push(
    legend(70, 40, [
      { label: `error (${run.label})`, color: ESTIMATE_COLOR },
      ...(withCov ? [{ label: "±3σ bound", color: "#d62728", dash: "4 3" }] : []),
    ]),
  );
  return document(WIDTH, HEIGHT, `Estimation error — ${run.label}`, body);
}

/** Robot pose variances plus per-landmark covariance traces over time. */
export function figureCovariance(run: RunLog): string {
  if (!hasCovariance(run.rows)) {
    throw new DataError(`run log column "cov_xx" is empty: estimator reported no covariance`);
  }
  const rows = run.rows.filter((r) => r.covXx !== null);
  const ts = rows.map((r) => r.t);

  const panelH = (HEIGHT - 140) / 2;
  const body: string[] = [];

  const robotSeries: Array<{ label: string; color: string; get: (r: RunRow) => number }> = [
    { label: "pose var x (m²)", color: PALETTE[0]!, get: (r) => r.covXx! },
    { label: "pose var y (m²)", color: PALETTE[1]!, get: (r) => r.covYy! },
    { label: "pose var heading (rad²)", color: PALETTE[2]!, get: (r) => r.covTt! },
  ];
  const topFrame = Frame.fit(
    ts,
    [...robotSeries.flatMap((s) => rows.map(s.get)), 0],
    60,
    56,
    WIDTH - 100,
    panelH,
  );
  body.push(topFrame.axes("t (s)", "robot variances"));
  for (const s of robotSeries) {
    body.push(
      topFrame.polyline(
        rows.map((r) => [r.t, s.get(r)]),
        { stroke: s.color, "stroke-width": 1.3 },
      ),
    );
  }
  body.push(legend(70, 70, robotSeries.map(({ label, color }) => ({ label, color }))));

  // Landmark traces appear when each landmark is registered and must never
  // increase afterwards.
  const traces = landmarkTraceSeries(run);
  const top2 = 56 + panelH + 40;
  const values = [...traces.values()].flatMap((s) => s.map(([, v]) => v));
  const botFrame = Frame.fit(ts, values.length > 0 ? [...values, 0] : [0, 1], 60, top2, WIDTH - 100, panelH);
  body.push(botFrame.axes("t (s)", "landmark covariance traces (m²)"));
  let i = 0;
  for (const [lid, series] of traces) {
    const color = PALETTE[i % PALETTE.length]!;
    body.push(botFrame.polyline(series, { stroke: color, "stroke-width": 1.1, opacity: 0.9 }));
    const last = series[series.length - 1]!;
    if (i < 12) {
      body.push(
        text(botFrame.toX(last[0]) + 3, botFrame.toY(last[1]) + 3, String(lid), {
          "font-size": 9,
          fill: color,
        }),
      );
    }
    i += 1;
  }
  if (traces.size === 0) {
    body.push(
      text(WIDTH / 2, top2 + panelH / 2, "no landmarks registered", {
        "font-size": 12,
        fill: "#666",
        "text-anchor": "middle",
      }),
    );
  }
  return document(WIDTH, HEIGHT, `Covariance — ${run.label}`, body);
}

/** Per-landmark (t, trace) series in registration order. */
export function landmarkTraceSeries(run: RunLog): Map<number, Array<[number, number]>> {
  const series = new Map<number, Array<[number, number]>>();
  for (const r of run.rows) {
    for (const [lid, value] of r.landmarkTraces) {
      let s = series.get(lid);
      if (!s) series.set(lid, (s = []));
      s.push([r.t, value]);
    }
  }
  return series;
}

/** Candidate quality scores over time; long-lived candidates highlighted. */
export function figureQuality(run: RunLog): string {
  const series = new Map<number, Array<[number, number]>>();
  for (const r of run.rows) {
    for (const [cid, q] of r.qualities) {
      let s = series.get(cid);
      if (!s) series.set(cid, (s = []));
      s.push([r.t, q]);
    }
  }
  if (series.size === 0) {
    throw new DataError(`run log column "q" is empty: pipeline tracked no candidates`);
  }

  const ts = run.rows.map((r) => r.t);
  const qs = [...series.values()].flatMap((s) => s.map(([, q]) => q));
  const frame = Frame.fit(ts, [...qs, 0], 60, 50, WIDTH - 100, HEIGHT - 110);
  const body: string[] = [frame.axes("t (s)", "quality score")];

  const byLifetime = [...series.entries()].sort((a, b) => b[1].length - a[1].length);
  const highlighted = byLifetime.slice(0, PALETTE.length);
  const rest = byLifetime.slice(PALETTE.length);
  for (const [, s] of rest) {
    body.push(frame.polyline(s, { stroke: "#cccccc", "stroke-width": 0.7, opacity: 0.7 }));
  }
  highlighted.forEach(([cid, s], i) => {
    const color = PALETTE[i]!;
    body.push(frame.polyline(s, { stroke: color, "stroke-width": 1.4 }));
    const last = s[s.length - 1]!;
    body.push(
      text(frame.toX(last[0]) + 3, frame.toY(last[1]) + 3, String(cid), {
        "font-size": 9,
        fill: color,
      }),
    );
  });
  body.push(
    legend(70, 64, [
      { label: `longest-lived candidates (${highlighted.length})`, color: PALETTE[0]! },
      { label: `transient candidates (${rest.length})`, color: "#cccccc" },
    ]),
  );
  return document(WIDTH, HEIGHT, `Landmark quality — ${run.label}`, body);
}

/** Estimated map with 3-sigma ellipses, optionally against truth landmarks. */
export function figureMap(map: MapLandmark[], truth: Truth | null): string {
  const xs = map.map((l) => l.x);
  const ys = map.map((l) => l.y);
  if (truth) {
    for (const l of truth.landmarks.values()) xs.push(l.x), ys.push(l.y);
  }
  const frame = Frame.fit(xs, ys, 60, 50, WIDTH - 100, HEIGHT - 110, { square: true });
  const body: string[] = [frame.axes("x (m)", "y (m)")];

  if (truth) {
    for (const l of truth.landmarks.values()) {
      body.push(frame.cross(l.x, l.y, 4, { stroke: "#222", "stroke-width": 1.2 }));
    }
  }
  for (const l of map) {
    body.push(frame.dot(l.x, l.y, 2.5, { fill: ESTIMATE_COLOR }));
    if (l.cov) {
      const [pxx, pxy, , pyy] = l.cov;
      body.push(
        frame.ellipse(covarianceEllipse(l.x, l.y, pxx, pxy, pyy), {
          stroke: ESTIMATE_COLOR,
          "stroke-width": 1,
          opacity: 0.8,
        }),
      );
    }
    body.push(
      text(frame.toX(l.x) + 5, frame.toY(l.y) - 5, String(l.id), {
        "font-size": 9,
        fill: ESTIMATE_COLOR,
      }),
    );
  }
  body.push(
    legend(70, 64, [
      { label: "estimated landmark (3σ ellipse)", color: ESTIMATE_COLOR },
      ...(truth ? [{ label: "true landmark +", color: "#222" }] : []),
    ]),
  );
  return document(WIDTH, HEIGHT, `Landmark map (${map.length} landmarks)`, body);
}
