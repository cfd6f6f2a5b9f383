/** Linear and base-10 logarithmic axis scales with tick generation. */

export interface Scale {
  toPixel(v: number): number;
  ticks(): { value: number; label: string }[];
  readonly kind: "linear" | "log";
}

function niceNumber(span: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(span)));
  const frac = span / mag;
  if (frac <= 1) return mag / 5;
  if (frac <= 2) return mag / 2;
  if (frac <= 5) return mag;
  return 2 * mag;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace("e", "E").toUpperCase();
  }
  const s = v.toPrecision(4);
  return String(Number(s));
}

export function linearScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 1e-3 : 1e-3;
    lo -= pad;
    hi = lo === hi ? hi + 2 * pad : hi + pad;
  }
  const step = niceNumber(hi - lo);
  const ticks: { value: number; label: string }[] = [];
  const first = Math.ceil(lo / step) * step;
  for (let v = first; v <= hi + 1e-12 * Math.abs(step); v += step) {
    const snapped = Math.abs(v) < step * 1e-9 ? 0 : v;
    ticks.push({ value: snapped, label: fmt(snapped) });
  }
  return {
    kind: "linear",
    toPixel: (v) => p0 + ((v - lo) / (hi - lo)) * (p1 - p0),
    ticks: () => ticks,
  };
}

export function logScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error("log scale needs positive bounds");
  }
  if (hi <= lo) {
    hi = lo * 10;
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const ticks: { value: number; label: string }[] = [];
  const span = Math.ceil(lhi) - Math.floor(llo);
  const stride = Math.max(1, Math.ceil(span / 9));
  for (let e = Math.ceil(llo); e <= Math.floor(lhi + 1e-12); e += stride) {
    ticks.push({ value: Math.pow(10, e), label: `1E${e}` });
  }
  return {
    kind: "log",
    toPixel: (v) => p0 + ((Math.log10(v) - llo) / (lhi - llo)) * (p1 - p0),
    ticks: () => ticks,
  };
}

export function extent(arrays: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const a of arrays) {
    for (const v of a) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error("cannot compute extent of empty data");
  }
  return [lo, hi];
}
