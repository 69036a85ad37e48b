/**
 * Strict reader for the headered comma-separated tables the modeling CLI
 * emits.  The schemas are plain numeric cells without quoting or escapes, so
 * a minimal parser keeps this package dependency-free.
 */

import { readFileSync } from "node:fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export class TableError extends Error {}

export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new TableError(`table not found: ${path}`);
  }
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new TableError(`empty table: ${path}`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new TableError(`${path}: ragged row at line ${i + 2}`);
    }
    return cells;
  });
  return { header, rows };
}

export function requireColumns(table: Table, names: string[], path: string): void {
  for (const name of names) {
    if (!table.header.includes(name)) {
      throw new TableError(`${path}: missing column '${name}' (have: ${table.header.join(", ")})`);
    }
  }
}

export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new TableError(`missing column '${name}'`);
  }
  return table.rows.map((r) => r[idx]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((cell, i) => {
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new TableError(`column '${name}' row ${i + 1}: non-numeric value '${cell}'`);
    }
    return value;
  });
}
