/** Deterministic SVG assembly: fixed styles, no timestamps, stable ordering. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 40, right: 30, bottom: 50, left: 60 };

export function linearScale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (lo === hi) {
    return [lo];
  }
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(rawStep))));
  const candidates = [1, 2, 5, 10].map((m) => m * mag);
  const step = candidates.find((s) => (hi - lo) / s <= count) ?? candidates[3];
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function formatNumber(v: number): string {
  if (Number.isInteger(v)) {
    return String(v);
  }
  const abs = Math.abs(v);
  if (abs !== 0 && (abs < 1e-3 || abs >= 1e5)) {
    return v.toExponential(2);
  }
  return String(Number(v.toPrecision(6)));
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  rect(x: number, y: number, w: number, h: number, fill: string, extra = ""): void {
    this.parts.push(
      `<rect x="${r2(x)}" y="${r2(y)}" width="${r2(w)}" height="${r2(h)}" fill="${fill}"${extra}/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#444", width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${r2(x1)}" y1="${r2(y1)}" x2="${r2(x2)}" y2="${r2(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${r2(cx)}" cy="${r2(cy)}" r="${r}" fill="${fill}"/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.2): void {
    const pts = points.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: boolean; fill?: string } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "middle";
    const fill = opts.fill ?? "#222";
    const transform = opts.rotate ? ` transform="rotate(-90 ${r2(x)} ${r2(y)})"` : "";
    this.parts.push(
      `<text x="${r2(x)}" y="${r2(y)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="Helvetica, Arial, sans-serif"${transform}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function r2(v: number): string {
  return (Math.round(v * 100) / 100).toString();
}

/** Viridis-like dark-to-light ramp sampled at fixed stops; t in [0, 1]. */
export function colorRamp(t: number): string {
  const stops: Array<[number, number, number]> = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const frac = pos - i;
  const mix = stops[i].map((c, k) => Math.round(c + frac * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

export function axes(
  svg: SvgBuilder,
  margin: Margin,
  plotW: number,
  plotH: number,
  labels: { x?: string; y?: string; title?: string },
): void {
  const x0 = margin.left;
  const y0 = margin.top + plotH;
  svg.line(x0, y0, x0 + plotW, y0);
  svg.line(x0, margin.top, x0, y0);
  if (labels.title) {
    svg.text(x0 + plotW / 2, margin.top - 16, labels.title, { size: 14 });
  }
  if (labels.x) {
    svg.text(x0 + plotW / 2, y0 + 38, labels.x);
  }
  if (labels.y) {
    svg.text(x0 - 42, margin.top + plotH / 2, labels.y, { rotate: true });
  }
}
