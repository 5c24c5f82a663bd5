/**
 * Minimal CSV reading for the benchmark / gradient-scan outputs.
 * Values never contain commas or quotes, so a plain split is enough.
 */
import * as fs from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function readCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf-8").trim();
  if (!text) {
    throw new Error(`empty CSV: ${path}`);
  }
  const lines = text.split(/\r?\n/);
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new Error(`row ${i + 2}: expected ${columns.length} cells, got ${cells.length}`);
    }
    const row: Record<string, string> = {};
    columns.forEach((c, j) => (row[c] = cells[j]));
    return row;
  });
  return { columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new Error(`missing column: ${column}`);
    }
  }
}

export function numeric(row: Record<string, string>, column: string): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new Error(`non-numeric value in column ${column}: ${row[column]}`);
  }
  return value;
}

/** Distinct values in first-appearance order. */
export function distinct(rows: Record<string, string>[], column: string): string[] {
  const seen: string[] = [];
  for (const row of rows) {
    if (!seen.includes(row[column])) {
      seen.push(row[column]);
    }
  }
  return seen;
}

export function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}
