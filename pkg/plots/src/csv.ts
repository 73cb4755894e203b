/**
 * Strict readers for the benchmark harness's published file formats:
 * the scale-sweep CSV, the two-column power trace CSV, and the energy
 * analysis JSON. Schema violations throw SchemaError naming the problem
 * (and the offending column or line), never a silent partial parse.
 */

import fs from "node:fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

/** Columns a scale sweep CSV must carry, in no particular order. */
export const SCALE_COLUMNS = [
  "neurons",
  "ranks",
  "repetition",
  "seed",
  "duration_ms",
  "status",
  "backend",
  "wall_clock_s",
  "setup_s",
  "computation_frac",
  "communication_frac",
  "barrier_frac",
  "other_frac",
  "real_time",
  "real_time_threshold_s",
  "total_spikes",
  "mean_rate_hz",
] as const;

export interface ScaleRow {
  neurons: number;
  ranks: number;
  repetition: number;
  seed: number;
  durationMs: number;
  status: string;
  backend: string;
  /** Numeric cells are null on failed rows (the harness leaves them empty). */
  wallClockS: number | null;
  setupS: number | null;
  computationFrac: number | null;
  communicationFrac: number | null;
  barrierFrac: number | null;
  otherFrac: number | null;
  realTime: boolean | null;
  realTimeThresholdS: number | null;
  totalSpikes: number | null;
  meanRateHz: number | null;
}

function num(row: Record<string, string>, col: string, where: string): number {
  const cell = (row[col] ?? "").trim();
  const v = Number(cell);
  if (cell === "" || !Number.isFinite(v)) {
    throw new SchemaError(`${where}: non-numeric ${col} ${JSON.stringify(cell)}`);
  }
  return v;
}

function numOrNull(row: Record<string, string>, col: string, where: string): number | null {
  const cell = (row[col] ?? "").trim();
  if (cell === "") return null;
  return num(row, col, where);
}

export function parseScaleCsv(text: string, source = "scale.csv"): ScaleRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  const missing = SCALE_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${source}: missing column(s): ${missing.join(", ")}`);
  }
  return parsed.data.map((row, i) => {
    const where = `${source} row ${i + 1}`;
    const status = (row.status ?? "").trim();
    const rt = (row.real_time ?? "").trim();
    return {
      neurons: num(row, "neurons", where),
      ranks: num(row, "ranks", where),
      repetition: num(row, "repetition", where),
      seed: num(row, "seed", where),
      durationMs: num(row, "duration_ms", where),
      status,
      backend: (row.backend ?? "").trim(),
      wallClockS: numOrNull(row, "wall_clock_s", where),
      setupS: numOrNull(row, "setup_s", where),
      computationFrac: numOrNull(row, "computation_frac", where),
      communicationFrac: numOrNull(row, "communication_frac", where),
      barrierFrac: numOrNull(row, "barrier_frac", where),
      otherFrac: numOrNull(row, "other_frac", where),
      realTime: rt === "" ? null : rt === "true",
      realTimeThresholdS: numOrNull(row, "real_time_threshold_s", where),
      totalSpikes: numOrNull(row, "total_spikes", where),
      meanRateHz: numOrNull(row, "mean_rate_hz", where),
    };
  });
}

export function loadScaleCsv(path: string): ScaleRow[] {
  return parseScaleCsv(fs.readFileSync(path, "utf-8"), path);
}

/** Rows that completed; the only rows with numbers worth plotting. */
export function okRows(rows: ScaleRow[]): ScaleRow[] {
  return rows.filter((r) => r.status === "ok");
}

export interface TracePoint {
  t: number;
  p: number;
}

/**
 * Two-column power trace (seconds, watts). One header row is allowed;
 * times must be strictly increasing and at least two samples present,
 * mirroring what the harness itself accepts.
 */
export function parseTraceCsv(text: string, source = "trace.csv"): TracePoint[] {
  const parsed = Papa.parse<string[]>(text, { skipEmptyLines: true });
  const out: TracePoint[] = [];
  parsed.data.forEach((cells, i) => {
    const lineno = i + 1;
    if (cells.length !== 2) {
      throw new SchemaError(`${source}:${lineno}: expected 2 columns, got ${cells.length}`);
    }
    const t = Number(cells[0]);
    const p = Number(cells[1]);
    if (!Number.isFinite(t) || !Number.isFinite(p)) {
      if (lineno === 1 && out.length === 0) return; // header row
      throw new SchemaError(`${source}:${lineno}: non-numeric sample ${JSON.stringify(cells)}`);
    }
    const last = out[out.length - 1];
    if (last !== undefined && t <= last.t) {
      throw new SchemaError(`${source}:${lineno}: time ${t} not increasing (previous ${last.t})`);
    }
    out.push({ t, p });
  });
  if (out.length < 2) {
    throw new SchemaError(`${source}: need at least 2 samples, got ${out.length}`);
  }
  return out;
}

export function loadTraceCsv(path: string): TracePoint[] {
  return parseTraceCsv(fs.readFileSync(path, "utf-8"), path);
}

/** Pull the idle baseline (watts) out of an energy analysis JSON. */
export function loadBaseline(path: string): number {
  const data = JSON.parse(fs.readFileSync(path, "utf-8")) as Record<string, unknown>;
  const w = data.baseline_w;
  if (typeof w !== "number" || !Number.isFinite(w)) {
    throw new SchemaError(`${path}: no numeric baseline_w field`);
  }
  return w;
}
