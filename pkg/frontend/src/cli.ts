#!/usr/bin/env node
/** plot --fig {2,3} --csv <paths...> --out <dir>; emits PNG. */
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";

import { CsvError, Series, parseCsv } from "./csv.js";
import { renderDivergenceMomentum, renderEnergyMass } from "./figures.js";

const USAGE =
  "usage: phasefem-plot plot --fig {2,3} --csv <paths...> --out <dir>";

interface Args {
  fig: number;
  csv: string[];
  out: string;
}

export function parseArgs(argv: string[]): Args {
  if (argv[0] !== "plot") {
    throw new UsageError(`unknown command '${argv[0] ?? ""}'`);
  }
  let fig: number | undefined;
  const csv: string[] = [];
  let out: string | undefined;
  let i = 1;
  while (i < argv.length) {
    const a = argv[i];
    if (a === "--fig") {
      fig = Number(argv[++i]);
      i++;
    } else if (a === "--csv") {
      i++;
      while (i < argv.length && !argv[i].startsWith("--")) {
        csv.push(argv[i++]);
      }
    } else if (a === "--out") {
      out = argv[++i];
      i++;
    } else {
      throw new UsageError(`unknown flag '${a}'`);
    }
  }
  if (fig !== 2 && fig !== 3) {
    throw new UsageError("--fig must be 2 or 3");
  }
  if (csv.length === 0 || out === undefined) {
    throw new UsageError("--csv and --out are required");
  }
  return { fig, csv, out };
}

export class UsageError extends Error {}

function loadSeries(paths: string[]): Series[] {
  return paths.map((p) => {
    const label = basename(p).replace(/\.csv$/i, "");
    return parseCsv(readFileSync(p, "utf-8"), label);
  });
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    if (e instanceof UsageError) {
      console.error(`error: ${e.message}`);
      console.error(USAGE);
      return 2;
    }
    throw e;
  }
  try {
    const series = loadSeries(args.csv);
    mkdirSync(args.out, { recursive: true });
    const png = args.fig === 2 ? renderEnergyMass(series)
      : renderDivergenceMomentum(series);
    const path = join(args.out, `fig${args.fig}.png`);
    writeFileSync(path, png);
    console.log(path);
    return 0;
  } catch (e) {
    if (e instanceof CsvError || (e as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(e as Error).message}`);
      return 1;
    }
    throw e;
  }
}

const isMain = process.argv[1]?.endsWith("cli.js")
  || process.argv[1]?.endsWith("phasefem-plot");
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}
