/** CSV table model mirroring the primary toolkit's dialect.
 *
 * Header row required, comma separated, `.` decimals, numerics unquoted.
 * A column is numeric when more than half of its non-empty cells parse as
 * finite floats (unless hinted); rows with unparsable numeric cells are
 * dropped and counted, matching the loader the exported concepts must pass
 * through with zero rejections.
 */

import fs from "node:fs";
import Papa from "papaparse";

export type Kind = "numeric" | "categorical";

export interface Column {
  name: string;
  kind: Kind;
}

export interface Table {
  columns: Column[];
  /** numeric cells as numbers, categorical as original text */
  rows: (number | string)[][];
  rejected: number;
}

function looksNumeric(cell: string): boolean {
  const t = cell.trim();
  if (t === "") return false;
  if (!Number.isNaN(Number(t))) return true;
  // python-style non-finite notation still looks numeric for inference
  return /^[+-]?(nan|inf(inity)?)$/i.test(t);
}

function parseFinite(cell: string): number | null {
  if (cell === "" || /^\s*$/.test(cell)) return null;
  const v = Number(cell);
  return Number.isFinite(v) ? v : null;
}

export function loadTable(path: string, hints: Record<string, Kind> = {}): Table {
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  if (data.length < 2) throw new Error(`${path}: need a header and at least one row`);
  const header = data[0];
  const body = data.slice(1);

  const columns: Column[] = header.map((name, j) => {
    if (hints[name]) return { name, kind: hints[name] };
    let numericish = 0;
    let nonEmpty = 0;
    for (const row of body) {
      const cell = row[j] ?? "";
      if (cell === "") continue;
      nonEmpty += 1;
      if (looksNumeric(cell)) numericish += 1;
    }
    return { name, kind: numericish * 2 > nonEmpty ? "numeric" : "categorical" };
  });

  const rows: (number | string)[][] = [];
  let rejected = 0;
  for (const raw of body) {
    if (raw.length !== header.length) {
      rejected += 1;
      continue;
    }
    const row: (number | string)[] = [];
    let ok = true;
    for (let j = 0; j < header.length; j++) {
      if (columns[j].kind === "numeric") {
        const v = parseFinite(raw[j]);
        if (v === null) {
          ok = false;
          break;
        }
        row.push(v);
      } else {
        row.push(raw[j]);
      }
    }
    if (ok) rows.push(row);
    else rejected += 1;
  }
  if (!rows.length) throw new Error(`${path}: all rows rejected`);
  return { columns, rows, rejected };
}

function formatCell(kind: Kind, value: number | string): string {
  if (kind === "numeric") return String(value as number);
  const text = String(value);
  return /[",\n]/.test(text) ? `"${text.replaceAll('"', '""')}"` : text;
}

export function writeTable(path: string, columns: Column[], rows: (number | string)[][]): void {
  const lines = [columns.map((c) => c.name).join(",")];
  for (const row of rows) {
    lines.push(row.map((v, j) => formatCell(columns[j].kind, v)).join(","));
  }
  fs.writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

export function pearson(x: number[], y: number[]): number {
  const n = x.length;
  if (n < 2 || y.length !== n) throw new Error("pearson needs equal lengths >= 2");
  let mx = 0;
  let my = 0;
  for (let i = 0; i < n; i++) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  let sxy = 0;
  let sxx = 0;
  let syy = 0;
  for (let i = 0; i < n; i++) {
    const dx = x[i] - mx;
    const dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx === 0 || syy === 0) throw new Error("zero variance: correlation undefined");
  return Math.min(1, Math.max(-1, sxy / Math.sqrt(sxx * syy)));
}

/** Most target-correlated numeric feature; ties break to the lower column index. */
export function selectDriftingFeature(table: Table, target: string): string {
  const tIdx = table.columns.findIndex((c) => c.name === target);
  if (tIdx < 0) throw new Error(`target ${target} not in table`);
  const ys = table.rows.map((r) => r[tIdx] as number);
  let bestName: string | null = null;
  let bestScore = -1;
  let sawNumeric = false;
  table.columns.forEach((col, j) => {
    if (j === tIdx || col.kind !== "numeric") return;
    sawNumeric = true;
    const xs = table.rows.map((r) => r[j] as number);
    let score: number;
    try {
      score = Math.abs(pearson(xs, ys));
    } catch {
      return; // zero-variance column: not a candidate
    }
    if (score > bestScore) {
      bestScore = score;
      bestName = col.name;
    }
  });
  if (!sawNumeric) throw new Error("no numeric feature columns");
  if (bestName === null) throw new Error("correlation undefined for every numeric feature");
  return bestName;
}

/** Stable ascending sort by the feature, then near-equal contiguous chunks
 * (earlier chunks absorb the remainder). */
export function chunkByFeature(
  table: Table,
  feature: string,
  numChunks: number,
): (number | string)[][][] {
  if (numChunks < 2) throw new Error("need at least 2 chunks");
  if (table.rows.length < numChunks) throw new Error("fewer rows than chunks");
  const fIdx = table.columns.findIndex((c) => c.name === feature);
  const order = table.rows
    .map((row, i) => ({ v: row[fIdx] as number, i }))
    .sort((a, b) => a.v - b.v || a.i - b.i)
    .map((e) => e.i);
  const base = Math.floor(table.rows.length / numChunks);
  const rem = table.rows.length % numChunks;
  const chunks: (number | string)[][][] = [];
  let at = 0;
  for (let c = 0; c < numChunks; c++) {
    const size = base + (c < rem ? 1 : 0);
    chunks.push(order.slice(at, at + size).map((i) => table.rows[i]));
    at += size;
  }
  return chunks;
}
