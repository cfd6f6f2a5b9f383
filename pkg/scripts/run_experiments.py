#!/usr/bin/env python3
"""Run the three reference experiments and collect their diagnostics CSVs.

Desk-scale defaults reproduce the structure checks quickly; pass --n 100
--T 3.0 for the production-scale setup (expect a long wait under the
direct solver).

Usage:
    python scripts/run_experiments.py [--n 32] [--T 0.1] [--seed 1]
                                      [--out out/acceptance] [--schemes ch chd chns]
                                      [--field-stride 0]
"""
import argparse
import sys
import time
from pathlib import Path

from phasefem.app import RunConfig, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--tau", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/acceptance")
    ap.add_argument("--schemes", nargs="+", default=["ch", "chd", "chns"],
                    choices=["ch", "chd", "chns"])
    ap.add_argument("--field-stride", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    for scheme in args.schemes:
        cfg = RunConfig(scheme=scheme, n=args.n, tau=args.tau, t_end=args.T,
                        seed=args.seed, out_dir=str(out),
                        field_stride=args.field_stride)
        t0 = time.time()
        summary = run_experiment(cfg, out)
        print(f"{scheme}: {time.time() - t0:.1f}s  "
              f"mass_drift={summary['mass_drift']:.3e}  "
              f"max_balance={summary['max_balance']:.3e}  "
              f"max_div={summary['max_div']:.3e}  -> {summary['csv']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
