/** Diagnostic figure rendering from parsed CSV series. */
import { CsvError, Series, column, driftSeries, flooredSeries } from "./csv.js";
import { encodePng } from "./png.js";
import { BLACK, GREY, LIGHTGREY, PALETTE, Raster, WHITE } from "./raster.js";
import { Scale, extent, linearScale, logScale } from "./scale.js";

const PANEL_W = 460;
const PANEL_H = 380;
const MARGIN = { left: 78, right: 16, top: 34, bottom: 46 };

interface Curve {
  label: string;
  x: number[];
  y: number[];
}

interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  yKind: "linear" | "log";
  curves: Curve[];
}

function drawPanel(r: Raster, ox: number, spec: PanelSpec): void {
  const x0 = ox + MARGIN.left;
  const x1 = ox + PANEL_W - MARGIN.right;
  const y0 = PANEL_H - MARGIN.bottom; // pixel of minimum value
  const y1 = MARGIN.top;
  const [xlo, xhi] = extent(spec.curves.map((c) => c.x));
  const xs = linearScale(xlo, xhi, x0, x1);
  let ys: Scale;
  if (spec.yKind === "log") {
    const [lo, hi] = extent(spec.curves.map((c) => c.y));
    ys = logScale(Math.max(lo, 1e-300), Math.max(hi, 1e-299), y0, y1);
  } else {
    const [lo, hi] = extent(spec.curves.map((c) => c.y));
    const pad = 0.05 * (hi - lo || Math.abs(hi) || 1);
    ys = linearScale(lo - pad, hi + pad, y0, y1);
  }

  // frame and grid
  for (const t of ys.ticks()) {
    const py = Math.round(ys.toPixel(t.value));
    r.line(x0, py, x1, py, LIGHTGREY);
    r.text(ox + 8, py - 3, t.label, BLACK);
  }
  for (const t of xs.ticks()) {
    const px = Math.round(xs.toPixel(t.value));
    r.line(px, y0, px, y1, LIGHTGREY);
    r.text(px - r.textWidth(t.label) / 2, y0 + 8, t.label, BLACK);
  }
  r.line(x0, y0, x1, y0, BLACK);
  r.line(x0, y0, x0, y1, BLACK);
  r.line(x1, y0, x1, y1, GREY);
  r.line(x0, y1, x1, y1, GREY);

  // curves
  spec.curves.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    for (let k = 1; k < c.x.length; k++) {
      r.line(
        xs.toPixel(c.x[k - 1]), ys.toPixel(Math.max(c.y[k - 1], 1e-300)),
        xs.toPixel(c.x[k]), ys.toPixel(Math.max(c.y[k], 1e-300)),
        color, 2,
      );
    }
  });

  // legend and titles
  r.text(ox + MARGIN.left, 10, spec.title, BLACK);
  let lx = x0 + 8;
  spec.curves.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    r.fillRect(lx, y1 + 8, 14, 3, color);
    r.text(lx + 18, y1 + 4, c.label.toUpperCase(), BLACK);
    lx += 30 + r.textWidth(c.label.toUpperCase());
  });
  r.text(Math.round((x0 + x1) / 2 - r.textWidth(spec.xLabel) / 2), PANEL_H - 14,
    spec.xLabel, BLACK);
  r.text(ox + 8, y1 - 16, spec.yLabel, BLACK);
}

function render(panels: PanelSpec[]): Buffer {
  const r = new Raster(PANEL_W * panels.length, PANEL_H, WHITE);
  panels.forEach((p, i) => drawPanel(r, i * PANEL_W, p));
  return encodePng(r.width, r.height, r.pixels);
}

/** Mass-conservation error (log) next to total energy (linear). */
export function renderEnergyMass(series: Series[]): Buffer {
  if (series.length === 0) {
    throw new CsvError("no input series");
  }
  const mass: Curve[] = series.map((s) => ({
    label: s.label,
    x: column(s, "time"),
    y: driftSeries(column(s, "mass")),
  }));
  const energy: Curve[] = series.map((s) => ({
    label: s.label,
    x: column(s, "time"),
    y: column(s, "E_total"),
  }));
  return render([
    { title: "MASS CONSERVATION ERROR", xLabel: "TIME", yLabel: "|M-M0|",
      yKind: "log", curves: mass },
    { title: "ENERGY EVOLUTION", xLabel: "TIME", yLabel: "E", yKind: "linear",
      curves: energy },
  ]);
}

/** Divergence norms (log) next to momentum drift of the inertial model. */
export function renderDivergenceMomentum(series: Series[]): Buffer {
  if (series.length === 0) {
    throw new CsvError("no input series");
  }
  const div: Curve[] = series.map((s) => ({
    label: s.label,
    x: column(s, "time"),
    y: flooredSeries(column(s, "div_norm")),
  }));
  const momentumSources = series.filter((s) =>
    s.label.toLowerCase().includes("chns"));
  const withMomentum = momentumSources.length > 0 ? momentumSources : series;
  const momentum: Curve[] = [];
  for (const s of withMomentum) {
    const t = column(s, "time");
    const lx = column(s, "Lx");
    const ly = column(s, "Ly");
    const ldrift = lx.map((v, i) =>
      Math.max(Math.hypot(v - lx[0], ly[i] - ly[0]), 1e-18));
    momentum.push({ label: `${s.label} |L-L0|`, x: t, y: ldrift });
    momentum.push({ label: `${s.label} |P-P0|`, x: t,
      y: driftSeries(column(s, "P")) });
  }
  return render([
    { title: "LOCAL DIVERGENCE ERROR", xLabel: "TIME", yLabel: "|DIV V|",
      yKind: "log", curves: div },
    { title: "MOMENTUM CONSERVATION ERROR", xLabel: "TIME", yLabel: "DRIFT",
      yKind: "log", curves: momentum },
  ]);
}

/** Decades separating the largest divergence curves of two series. */
export function divergenceSeparationDecades(a: Series, b: Series): number {
  const da = Math.max(...column(a, "div_norm").slice(1).map(Math.abs), 1e-300);
  const db = Math.max(...column(b, "div_norm").slice(1).map(Math.abs), 1e-300);
  return Math.abs(Math.log10(da) - Math.log10(db));
}
