#!/usr/bin/env node
/**
 * Render one figure from modeling-CLI tables:
 *
 *   latentclass-figures render --kind waic-heatmap --input waic_grid.csv --output fig.svg
 *   latentclass-figures render --spec figure.json
 *
 * Output is written only when rendering succeeds; schema mismatches exit
 * nonzero without touching the output path.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { dirname } from "node:path";

import { FigureKind, RenderSpec, renderSpec } from "./figures.js";
import { TableError } from "./table.js";

const KINDS: FigureKind[] = ["waic-heatmap", "trace", "beta-intervals", "oracle-curve", "class-map"];

function parseArgs(argv: string[]): RenderSpec {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new TableError(`unexpected argument '${arg}'`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new TableError(`flag ${arg} needs a value`);
    }
    flags.set(arg.slice(2), value);
    i++;
  }
  let spec: Partial<RenderSpec> = {};
  const specPath = flags.get("spec");
  if (specPath) {
    spec = JSON.parse(readFileSync(specPath, "utf8"));
  }
  const take = (name: string) => flags.get(name);
  if (take("kind")) spec.kind = take("kind") as FigureKind;
  if (take("input")) spec.input = take("input");
  if (take("output")) spec.output = take("output");
  if (take("coords")) spec.coords = take("coords");
  if (take("truth")) spec.truth = take("truth");
  if (take("truth-g")) spec.truthG = take("truth-g");
  if (take("title")) spec.title = take("title");
  if (take("x-label")) spec.xLabel = take("x-label");
  if (take("y-label")) spec.yLabel = take("y-label");
  const where = take("where");
  if (where) {
    spec.where = Object.fromEntries(
      where.split(",").map((pair) => {
        const [k, v] = pair.split("=");
        if (!k || v === undefined) {
          throw new TableError(`bad --where entry '${pair}' (expected name=value)`);
        }
        return [k, v];
      }),
    );
  }
  if (!spec.kind || !KINDS.includes(spec.kind)) {
    throw new TableError(`--kind must be one of: ${KINDS.join(", ")}`);
  }
  if (!spec.input || !spec.output) {
    throw new TableError("--input and --output are required");
  }
  return spec as RenderSpec;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    process.stderr.write("usage: latentclass-figures render --kind <kind> --input <table> --output <svg>\n");
    return 2;
  }
  try {
    const spec = parseArgs(argv.slice(1));
    const svg = renderSpec(spec);
    mkdirSync(dirname(spec.output), { recursive: true });
    writeFileSync(spec.output, svg + "\n");
    process.stdout.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (err) {
    if (err instanceof TableError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
