/**
 * Figure renderers over the modeling CLI's documented table schemas.  All
 * statistics arrive precomputed in the tables; this package only draws.
 */

import { Table, TableError, column, numericColumn, requireColumns, readTable } from "./table.js";
import { DEFAULT_MARGIN, SvgBuilder, axes, colorRamp, formatNumber, linearScale, niceTicks } from "./svg.js";

export interface FigureOptions {
  title?: string;
  xLabel?: string;
  yLabel?: string;
  where?: Record<string, string>;
}

const CLASS_COLORS = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

/** WAIC grid as a heatmap; darker cells mark smaller WAIC. */
export function waicHeatmap(table: Table, opts: FigureOptions = {}): string {
  requireColumns(table, ["q", "d", "waic"], "waic grid");
  if (table.rows.length === 0) {
    throw new TableError("waic grid table has no rows");
  }
  const qs = numericColumn(table, "q");
  const ds = numericColumn(table, "d");
  const waics = numericColumn(table, "waic");
  const qLevels = [...new Set(qs)].sort((a, b) => a - b);
  const dLevels = [...new Set(ds)].sort((a, b) => a - b);
  const lo = Math.min(...waics);
  const hi = Math.max(...waics);
  const cell = 72;
  const margin = DEFAULT_MARGIN;
  const plotW = cell * dLevels.length;
  const plotH = cell * qLevels.length;
  const svg = new SvgBuilder(margin.left + plotW + margin.right, margin.top + plotH + margin.bottom);
  for (let k = 0; k < waics.length; k++) {
    const col = dLevels.indexOf(ds[k]);
    const row = qLevels.indexOf(qs[k]);
    // darker = smaller: the ramp runs dark at 0
    const t = hi === lo ? 0 : (waics[k] - lo) / (hi - lo);
    const x = margin.left + col * cell;
    const y = margin.top + row * cell;
    svg.rect(x, y, cell - 2, cell - 2, colorRamp(t), ' data-role="cell"');
    svg.text(x + cell / 2 - 1, y + cell / 2 + 4, formatNumber(Math.round(waics[k] * 100) / 100), {
      size: 11,
      fill: t < 0.55 ? "#ffffff" : "#111111",
    });
  }
  qLevels.forEach((q, row) => {
    svg.text(margin.left - 14, margin.top + row * cell + cell / 2 + 4, `q=${q}`, { anchor: "end" });
  });
  dLevels.forEach((d, col) => {
    svg.text(margin.left + col * cell + cell / 2, margin.top + plotH + 20, `d=${d}`);
  });
  if (opts.title ?? "WAIC by model structure") {
    svg.text(margin.left + plotW / 2, margin.top - 16, opts.title ?? "WAIC by model structure", { size: 14 });
  }
  return svg.render();
}

/** Trace of one scalar parameter across retained iterations. */
export function tracePlot(table: Table, opts: FigureOptions = {}): string {
  requireColumns(table, ["iteration", "value"], "trace input");
  if (table.rows.length === 0) {
    throw new TableError("trace table has no rows");
  }
  const indexCols = table.header.filter((h) => h !== "iteration" && h !== "value");
  let rows = table.rows;
  const selected: Record<string, string> = {};
  for (const name of indexCols) {
    const want = opts.where?.[name] ?? rows[0][table.header.indexOf(name)];
    selected[name] = want;
    rows = rows.filter((r) => r[table.header.indexOf(name)] === want);
  }
  if (rows.length === 0) {
    throw new TableError(`no rows match ${JSON.stringify(opts.where)}`);
  }
  const iters = rows.map((r) => Number(r[table.header.indexOf("iteration")]));
  const values = rows.map((r) => Number(r[table.header.indexOf("value")]));
  if (values.some((v) => !Number.isFinite(v))) {
    throw new TableError("trace values must be finite numbers");
  }
  const margin = DEFAULT_MARGIN;
  const plotW = 560;
  const plotH = 260;
  const svg = new SvgBuilder(margin.left + plotW + margin.right, margin.top + plotH + margin.bottom);
  const xs = linearScale([Math.min(...iters), Math.max(...iters)], [margin.left, margin.left + plotW]);
  const vLo = Math.min(...values);
  const vHi = Math.max(...values);
  const pad = (vHi - vLo || 1) * 0.05;
  const ys = linearScale([vLo - pad, vHi + pad], [margin.top + plotH, margin.top]);
  for (const t of niceTicks(vLo - pad, vHi + pad)) {
    svg.line(margin.left, ys(t), margin.left + plotW, ys(t), "#dddddd", 0.7);
    svg.text(margin.left - 8, ys(t) + 4, formatNumber(t), { anchor: "end", size: 10 });
  }
  for (const t of niceTicks(Math.min(...iters), Math.max(...iters))) {
    svg.text(xs(t), margin.top + plotH + 18, formatNumber(t), { size: 10 });
  }
  svg.polyline(iters.map((it, i) => [xs(it), ys(values[i])]), "#4c72b0");
  const label = indexCols.map((c) => `${c}=${selected[c]}`).join(", ");
  axes(svg, margin, plotW, plotH, {
    title: opts.title ?? `Trace (${label})`,
    x: opts.xLabel ?? "iteration",
    y: opts.yLabel ?? "value",
  });
  return svg.render();
}

/**
 * True coefficient values against posterior means with 95% interval bars.
 * Slope entries can be restricted to the truly active ones via the truth
 * loading table; intercept rows are always shown.
 */
export function betaIntervals(summary: Table, truth: Table, truthG: Table | null, opts: FigureOptions = {}): string {
  requireColumns(summary, ["dim", "level", "coef", "mean", "lower", "upper"], "summary_B");
  requireColumns(truth, ["dim", "level", "coef", "value"], "truth_B");
  if (summary.rows.length === 0) {
    throw new TableError("summary table has no rows");
  }
  const truthMap = new Map<string, number>();
  truth.rows.forEach((r) => {
    truthMap.set(
      `${r[truth.header.indexOf("dim")]}|${r[truth.header.indexOf("level")]}|${r[truth.header.indexOf("coef")]}`,
      Number(r[truth.header.indexOf("value")]),
    );
  });
  const activeMap = new Map<string, number>();
  if (truthG) {
    requireColumns(truthG, ["dim", "attribute", "value"], "truth_G");
    truthG.rows.forEach((r) => {
      activeMap.set(
        `${r[truthG.header.indexOf("dim")]}|${r[truthG.header.indexOf("attribute")]}`,
        Number(r[truthG.header.indexOf("value")]),
      );
    });
  }
  interface Point {
    truth: number;
    mean: number;
    lower: number;
    upper: number;
  }
  const points: Point[] = [];
  const h = summary.header;
  for (const r of summary.rows) {
    const key = `${r[h.indexOf("dim")]}|${r[h.indexOf("level")]}|${r[h.indexOf("coef")]}`;
    const coef = Number(r[h.indexOf("coef")]);
    const t = truthMap.get(key);
    if (t === undefined) {
      continue;
    }
    if (coef > 0 && truthG) {
      const active = activeMap.get(`${r[h.indexOf("dim")]}|${coef}`);
      if (active === 0) {
        continue; // inactive slope: posterior equals the prior, not informative
      }
    }
    points.push({
      truth: t,
      mean: Number(r[h.indexOf("mean")]),
      lower: Number(r[h.indexOf("lower")]),
      upper: Number(r[h.indexOf("upper")]),
    });
  }
  if (points.length === 0) {
    throw new TableError("no overlapping coefficient entries between summary and truth tables");
  }
  const margin = DEFAULT_MARGIN;
  const plotW = 420;
  const plotH = 420;
  const svg = new SvgBuilder(margin.left + plotW + margin.right, margin.top + plotH + margin.bottom);
  const allVals = points.flatMap((p) => [p.truth, p.lower, p.upper]);
  const lo = Math.min(...allVals);
  const hi = Math.max(...allVals);
  const pad = (hi - lo || 1) * 0.06;
  const xs = linearScale([lo - pad, hi + pad], [margin.left, margin.left + plotW]);
  const ys = linearScale([lo - pad, hi + pad], [margin.top + plotH, margin.top]);
  for (const t of niceTicks(lo - pad, hi + pad)) {
    svg.text(xs(t), margin.top + plotH + 18, formatNumber(t), { size: 10 });
    svg.text(margin.left - 8, ys(t) + 4, formatNumber(t), { anchor: "end", size: 10 });
  }
  svg.line(xs(lo - pad), ys(lo - pad), xs(hi + pad), ys(hi + pad), "#999999", 1, "4,3");
  for (const p of points) {
    svg.line(xs(p.truth), ys(p.lower), xs(p.truth), ys(p.upper), "#4c72b0", 1.2);
    svg.circle(xs(p.truth), ys(p.mean), 2.4, "#c44e52");
  }
  axes(svg, margin, plotW, plotH, {
    title: opts.title ?? "True coefficients vs posterior intervals",
    x: opts.xLabel ?? "true value",
    y: opts.yLabel ?? "posterior mean and 95% interval",
  });
  return svg.render();
}

/** Oracle-distance curve against the outcome dimension (log2 axis). */
export function oracleCurve(table: Table, opts: FigureOptions = {}): string {
  requireColumns(table, ["p", "distance"], "oracle report");
  if (table.rows.length === 0) {
    throw new TableError("oracle report has no rows");
  }
  const ps = numericColumn(table, "p");
  const dist = numericColumn(table, "distance");
  const order = ps.map((_, i) => i).sort((a, b) => ps[a] - ps[b]);
  const lx = order.map((i) => Math.log2(ps[i]));
  const ly = order.map((i) => dist[i]);
  const margin = DEFAULT_MARGIN;
  const plotW = 460;
  const plotH = 300;
  const svg = new SvgBuilder(margin.left + plotW + margin.right, margin.top + plotH + margin.bottom);
  const xs = linearScale([Math.min(...lx), Math.max(...lx)], [margin.left, margin.left + plotW]);
  const yHi = Math.max(...ly) * 1.1 || 1;
  const ysc = linearScale([0, yHi], [margin.top + plotH, margin.top]);
  for (const t of niceTicks(0, yHi)) {
    svg.line(margin.left, ysc(t), margin.left + plotW, ysc(t), "#dddddd", 0.7);
    svg.text(margin.left - 8, ysc(t) + 4, formatNumber(t), { anchor: "end", size: 10 });
  }
  order.forEach((i, k) => {
    svg.text(xs(lx[k]), margin.top + plotH + 18, formatNumber(ps[i]), { size: 10 });
  });
  svg.polyline(lx.map((v, i) => [xs(v), ysc(ly[i])]), "#4c72b0", 1.6);
  lx.forEach((v, i) => svg.circle(xs(v), ysc(ly[i]), 3, "#4c72b0"));
  axes(svg, margin, plotW, plotH, {
    title: opts.title ?? "Posterior vs oracle class probabilities",
    x: opts.xLabel ?? "outcome dimension p",
    y: opts.yLabel ?? "mean L1 distance",
  });
  return svg.render();
}

/** Scatter of observation coordinates colored by posterior-mode class. */
export function classMap(modeZ: Table, coords: Table, opts: FigureOptions = {}): string {
  requireColumns(modeZ, ["obs", "mode"], "mode_z");
  requireColumns(coords, ["obs", "x", "y"], "coords");
  if (modeZ.rows.length === 0) {
    throw new TableError("mode_z table has no rows");
  }
  const modeByObs = new Map<string, number>();
  modeZ.rows.forEach((r) => {
    modeByObs.set(r[modeZ.header.indexOf("obs")], Number(r[modeZ.header.indexOf("mode")]));
  });
  const xsRaw = numericColumn(coords, "x");
  const ysRaw = numericColumn(coords, "y");
  const obsCol = column(coords, "obs");
  const classes = obsCol.map((o) => {
    const mode = modeByObs.get(o);
    if (mode === undefined) {
      throw new TableError(`coords observation ${o} missing from mode_z`);
    }
    return mode;
  });
  const margin = DEFAULT_MARGIN;
  const plotW = 400;
  const plotH = 400;
  const svg = new SvgBuilder(margin.left + plotW + margin.right + 90, margin.top + plotH + margin.bottom);
  const padX = (Math.max(...xsRaw) - Math.min(...xsRaw) || 1) * 0.05;
  const padY = (Math.max(...ysRaw) - Math.min(...ysRaw) || 1) * 0.05;
  const xs = linearScale([Math.min(...xsRaw) - padX, Math.max(...xsRaw) + padX], [margin.left, margin.left + plotW]);
  const ys = linearScale([Math.min(...ysRaw) - padY, Math.max(...ysRaw) + padY], [margin.top + plotH, margin.top]);
  classes.forEach((cls, i) => {
    svg.circle(xs(xsRaw[i]), ys(ysRaw[i]), 3.2, CLASS_COLORS[(cls - 1) % CLASS_COLORS.length]);
  });
  const levels = [...new Set(classes)].sort((a, b) => a - b);
  levels.forEach((cls, i) => {
    const ly = margin.top + 14 + i * 20;
    svg.circle(margin.left + plotW + 24, ly - 4, 4, CLASS_COLORS[(cls - 1) % CLASS_COLORS.length]);
    svg.text(margin.left + plotW + 36, ly, `class ${cls}`, { anchor: "start", size: 11 });
  });
  axes(svg, margin, plotW, plotH, {
    title: opts.title ?? "Posterior-mode class membership",
    x: opts.xLabel ?? "x",
    y: opts.yLabel ?? "y",
  });
  return svg.render();
}

export type FigureKind = "waic-heatmap" | "trace" | "beta-intervals" | "oracle-curve" | "class-map";

export interface RenderSpec {
  kind: FigureKind;
  input: string;
  output: string;
  coords?: string;
  truth?: string;
  truthG?: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  where?: Record<string, string>;
}

export function renderSpec(spec: RenderSpec): string {
  const opts: FigureOptions = {
    title: spec.title,
    xLabel: spec.xLabel,
    yLabel: spec.yLabel,
    where: spec.where,
  };
  const input = readTable(spec.input);
  switch (spec.kind) {
    case "waic-heatmap":
      return waicHeatmap(input, opts);
    case "trace":
      return tracePlot(input, opts);
    case "beta-intervals": {
      if (!spec.truth) {
        throw new TableError("beta-intervals needs --truth (truth_B.csv)");
      }
      const truthG = spec.truthG ? readTable(spec.truthG) : null;
      return betaIntervals(input, readTable(spec.truth), truthG, opts);
    }
    case "oracle-curve":
      return oracleCurve(input, opts);
    case "class-map": {
      if (!spec.coords) {
        throw new TableError("class-map needs --coords (obs,x,y table)");
      }
      return classMap(input, readTable(spec.coords), opts);
    }
    default:
      throw new TableError(`unknown figure kind '${(spec as RenderSpec).kind}'`);
  }
}
