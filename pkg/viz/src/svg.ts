/**
 * Minimal SVG assembly: element helpers, a data-to-pixel frame, and the
 * covariance-ellipse geometry shared by several figures.
 */

export interface EllipseSpec {
  cx: number;
  cy: number;
  /** semi-axes in data units */
  rx: number;
  ry: number;
  /** orientation of the rx axis, radians counter-clockwise */
  angle: number;
}

/**
 * 3-sigma ellipse of a 2x2 covariance [[pxx, pxy], [pyx, pyy]].
 *
 * Closed-form symmetric eigendecomposition: the major axis points along
 * the eigenvector of the larger eigenvalue.  Tiny negative eigenvalues
 * from roundoff clamp to zero.
 */
export function covarianceEllipse(
  cx: number,
  cy: number,
  pxx: number,
  pxy: number,
  pyy: number,
  nSigma = 3,
): EllipseSpec {
  const mean = (pxx + pyy) / 2;
  const diff = (pxx - pyy) / 2;
  const radius = Math.hypot(diff, pxy);
  const l1 = Math.max(mean + radius, 0);
  const l2 = Math.max(mean - radius, 0);
  const angle = 0.5 * Math.atan2(2 * pxy, pxx - pyy);
  return { cx, cy, rx: nSigma * Math.sqrt(l1), ry: nSigma * Math.sqrt(l2), angle };
}

const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

const fmt = (v: number): string => {
  const r = Number(v.toFixed(2));
  return Object.is(r, -0) ? "0" : String(r);
};

export function tag(name: string, attrs: Record<string, string | number>, body = ""): string {
  const parts = Object.entries(attrs).map(([k, v]) =>
    ` ${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`,
  );
  return body === ""
    ? `<${name}${parts.join("")}/>`
    : `<${name}${parts.join("")}>${body}</${name}>`;
}

/** Maps a data rectangle onto a pixel rectangle (y axis flipped). */
export class Frame {
  readonly sx: number;
  readonly sy: number;

  constructor(
    readonly x0: number,
    readonly x1: number,
    readonly y0: number,
    readonly y1: number,
    readonly px: number,
    readonly py: number,
    readonly pw: number,
    readonly ph: number,
  ) {
    this.sx = pw / (x1 - x0 || 1);
    this.sy = ph / (y1 - y0 || 1);
  }

  /** Frame covering the data ranges with a relative margin. */
  static fit(
    xs: number[],
    ys: number[],
    px: number,
    py: number,
    pw: number,
    ph: number,
    opts: { margin?: number; square?: boolean } = {},
  ): Frame {
    const margin = opts.margin ?? 0.05;
    let x0 = Math.min(...xs);
    let x1 = Math.max(...xs);
    let y0 = Math.min(...ys);
    let y1 = Math.max(...ys);
    if (x0 === x1) (x0 -= 0.5), (x1 += 0.5);
    if (y0 === y1) (y0 -= 0.5), (y1 += 0.5);
    const mx = (x1 - x0) * margin;
    const my = (y1 - y0) * margin;
    x0 -= mx, x1 += mx, y0 -= my, y1 += my;
    if (opts.square) {
      // Equal data-units-per-pixel on both axes, centered.
      const scale = Math.min(pw / (x1 - x0), ph / (y1 - y0));
      const cx = (x0 + x1) / 2;
      const cy = (y0 + y1) / 2;
      x0 = cx - pw / scale / 2, x1 = cx + pw / scale / 2;
      y0 = cy - ph / scale / 2, y1 = cy + ph / scale / 2;
    }
    return new Frame(x0, x1, y0, y1, px, py, pw, ph);
  }

  toX(x: number): number {
    return this.px + (x - this.x0) * this.sx;
  }

  toY(y: number): number {
    return this.py + this.ph - (y - this.y0) * this.sy;
  }

  polyline(pts: Array<[number, number]>, attrs: Record<string, string | number>): string {
    const points = pts.map(([x, y]) => `${fmt(this.toX(x))},${fmt(this.toY(y))}`).join(" ");
    return tag("polyline", { points, fill: "none", ...attrs });
  }

  ellipse(e: EllipseSpec, attrs: Record<string, string | number>): string {
    const cx = this.toX(e.cx);
    const cy = this.toY(e.cy);
    // Pixel y grows downward, so a CCW data angle is CW in pixels.
    const deg = (-e.angle * 180) / Math.PI;
    return tag("ellipse", {
      cx: 0,
      cy: 0,
      rx: e.rx * this.sx,
      ry: e.ry * this.sy,
      transform: `translate(${fmt(cx)} ${fmt(cy)}) rotate(${fmt(deg)})`,
      fill: "none",
      ...attrs,
    });
  }

  cross(x: number, y: number, size: number, attrs: Record<string, string | number>): string {
    const cx = this.toX(x);
    const cy = this.toY(y);
    const d = `M ${fmt(cx - size)} ${fmt(cy)} H ${fmt(cx + size)} M ${fmt(cx)} ${fmt(cy - size)} V ${fmt(cy + size)}`;
    return tag("path", { d, ...attrs });
  }

  dot(x: number, y: number, r: number, attrs: Record<string, string | number>): string {
    return tag("circle", { cx: this.toX(x), cy: this.toY(y), r, ...attrs });
  }

  /** Border box, corner range labels and axis titles. */
  axes(xLabel: string, yLabel: string): string {
    const items = [
      tag("rect", {
        x: this.px,
        y: this.py,
        width: this.pw,
        height: this.ph,
        fill: "none",
        stroke: "#333",
      }),
      text(this.px, this.py + this.ph + 14, `${xLabel}: ${fmt(this.x0)} … ${fmt(this.x1)}`, {
        "font-size": 11,
        fill: "#333",
      }),
      text(this.px, this.py - 4, `${yLabel}: ${fmt(this.y0)} … ${fmt(this.y1)}`, {
        "font-size": 11,
        fill: "#333",
      }),
    ];
    return items.join("");
  }
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string | number> = {},
): string {
  return tag("text", { x, y, ...attrs }, esc(content));
}

export interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
}

export function legend(x: number, y: number, entries: LegendEntry[]): string {
  const rows = entries.map((e, i) => {
    const yy = y + i * 16;
    return (
      tag("line", {
        x1: x,
        y1: yy,
        x2: x + 22,
        y2: yy,
        stroke: e.color,
        "stroke-width": 2,
        ...(e.dash ? { "stroke-dasharray": e.dash } : {}),
      }) + text(x + 28, yy + 4, e.label, { "font-size": 11, fill: "#333" })
    );
  });
  return rows.join("");
}

export function document(width: number, height: number, title: string, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    tag("rect", { x: 0, y: 0, width, height, fill: "white" }),
    text(width / 2, 22, title, { "font-size": 15, "text-anchor": "middle", fill: "#111" }),
    ...body,
    "</svg>",
  ].join("\n");
}
