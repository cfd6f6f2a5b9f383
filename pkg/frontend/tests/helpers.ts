import { EXPECTED_HEADER } from "../src/csv.js";

export interface SyntheticOptions {
  steps?: number;
  massDrift?: number;
  divLevel?: number;
  momentumDrift?: number;
  energyStart?: number;
}

/** Build a CSV string with the solver's exact column contract. */
export function syntheticCsv(opts: SyntheticOptions = {}): string {
  const steps = opts.steps ?? 20;
  const massDrift = opts.massDrift ?? 1e-15;
  const divLevel = opts.divLevel ?? 0;
  const momentumDrift = opts.momentumDrift ?? 0;
  const e0 = opts.energyStart ?? 0.0144;
  const lines = [EXPECTED_HEADER.join(",")];
  for (let k = 0; k <= steps; k++) {
    const t = k * 1e-3;
    const mass = 0.4 + (k % 2 === 0 ? 1 : -1) * massDrift * k;
    const energy = e0 * Math.exp(-0.05 * k);
    const div = k === 0 ? 0 : divLevel * (1 + 0.1 * Math.sin(k));
    const lx = momentumDrift * k;
    const ly = -momentumDrift * 0.5 * k;
    const p = momentumDrift * 2 * k;
    lines.push([
      k, t, mass, energy, energy * 0.1, energy * 0.9, 0,
      1e-7, 0, 0, 1e-17, lx, ly, p, div, k === 0 ? 0 : 2, 1e-15,
    ].join(","));
  }
  return lines.join("\n") + "\n";
}
