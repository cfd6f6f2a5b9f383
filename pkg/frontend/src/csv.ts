/** Parsing of the solver's per-step diagnostics CSV. */

export const EXPECTED_HEADER = [
  "step", "time", "mass", "E_total", "E_interf", "E_bulk", "E_kin",
  "diss_mob", "diss_alpha", "diss_visc", "balance_res", "Lx", "Ly", "P",
  "div_norm", "newton_iters", "newton_res",
];

export class CsvError extends Error {}

export interface Series {
  /** Curve label, typically the scheme name. */
  label: string;
  /** Column name -> values, one entry per data row. */
  columns: Map<string, number[]>;
  rows: number;
}

export function parseCsv(text: string, label: string): Series {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new CsvError(`empty input for ${label}`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  for (const col of EXPECTED_HEADER) {
    if (!header.includes(col)) {
      throw new CsvError(`missing column '${col}' in ${label}`);
    }
  }
  if (lines.length === 1) {
    throw new CsvError(`no data rows in ${label}`);
  }
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(`row ${i + 1} of ${label} has ${parts.length} fields, expected ${header.length}`);
    }
    for (let j = 0; j < header.length; j++) {
      const v = Number(parts[j]);
      if (!Number.isFinite(v)) {
        throw new CsvError(`row ${i + 1} of ${label}: non-numeric value '${parts[j]}' in ${header[j]}`);
      }
      columns.get(header[j])!.push(v);
    }
  }
  return { label, columns, rows: lines.length - 1 };
}

export function column(s: Series, name: string): number[] {
  const col = s.columns.get(name);
  if (col === undefined) {
    throw new CsvError(`missing column '${name}' in ${s.label}`);
  }
  return col;
}

/** |x(t) - x(0)| with a floor so the values survive a log scale. */
export function driftSeries(values: number[], floor = 1e-18): number[] {
  const ref = values[0];
  return values.map((v) => Math.max(Math.abs(v - ref), floor));
}

export function flooredSeries(values: number[], floor = 1e-18): number[] {
  return values.map((v) => Math.max(Math.abs(v), floor));
}
