#!/usr/bin/env python3
"""Sweep the homogenization error over eps and print rate tables.

For a catalog problem this runs the oscillatory and averaged solves on a
shared grid at each eps, prints sup-norm errors with their cell
tolerances, the fitted power law, and the theorem verdicts, and writes
the raw rows as CSV.

Usage:
    python3 scripts/rate_tables.py
    python3 scripts/rate_tables.py --spec prop42 --times 1.0 --eps 0.2 0.1 0.05
    python3 scripts/rate_tables.py --lams 0.25 0.5 --out rates.csv
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hjhomog.effective import EffectiveHamiltonian1D
from hjhomog.problem import CATALOG_NAMES, catalog
from hjhomog.rates import (
    RateConfig,
    run_rate_sweep,
    run_static_sweep,
    verify_static_uniformity,
    verify_thm_main,
    verify_thm_static,
)


def print_report(rep) -> None:
    label = "t" if rep.kind == "cauchy" else "lam"
    print(f"\n{rep.spec_name} {rep.kind} {label}={rep.t_or_lam:g}  "
          f"({rep.runtime_seconds:.1f}s)")
    print(f"  {'eps':>8}  {'error':>12}  {'cell tol':>12}")
    for eps, err, tol in rep.csv_rows():
        print(f"  {eps:8.4f}  {err:12.6g}  {tol:12.3g}")
    if rep.alpha is not None:
        print(f"  fit: error ~ {rep.c_hat:.3g} * eps^{rep.alpha:.3f}  "
              f"(max log deviation {rep.residual:.2g})")
    else:
        print(f"  fit: {rep.fit_note}")
    for name, verdict in rep.verdicts.items():
        print(f"  {name}: {verdict['status']}  "
              f"spread={verdict.get('spread', float('nan')):.3g}  "
              f"slope={verdict.get('trend_slope')}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default="prop43_cauchy", choices=CATALOG_NAMES)
    ap.add_argument("--times", type=float, nargs="+", default=[1.0, 0.05])
    ap.add_argument("--lams", type=float, nargs="*", default=[],
                    help="discount rates for static sweeps (none by default)")
    ap.add_argument("--eps", type=float, nargs="+",
                    default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--out", type=Path, default=None, help="optional CSV path")
    args = ap.parse_args()

    spec = catalog(args.spec)
    eff = EffectiveHamiltonian1D.build(spec)
    cfg = RateConfig()

    reports = [verify_thm_main(rep, cfg)
               for rep in run_rate_sweep(spec, eff, args.times, args.eps, cfg)]
    statics = [verify_thm_static(run_static_sweep(spec, eff, lam, args.eps, cfg), cfg)
               for lam in args.lams]
    for rep in reports + statics:
        print_report(rep)
    if len(statics) > 1:
        uni = verify_static_uniformity(statics, cfg)
        print(f"\nstatic uniformity: {uni['status']}  spread={uni['spread']:.3g}")

    if args.out is not None:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "t_or_lam", "eps", "error", "tol"])
            for rep in reports + statics:
                for eps, err, tol in rep.csv_rows():
                    w.writerow([rep.kind, rep.t_or_lam, eps, err, tol])
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
