#!/usr/bin/env python3
"""Tabulate and plot effective Hamiltonians for the catalog problems.

Builds the averaged Hamiltonian and its Lagrangian for each catalog
micro-potential, prints the flat-piece edge p_c, and writes a two-panel
SVG portrait.

Usage:
    python3 scripts/effective_portraits.py
    python3 scripts/effective_portraits.py --out portraits.svg --n-p 4097
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from hjhomog.effective import EffectiveHamiltonian1D, p_critical
from hjhomog.problem import catalog

# one representative spec per distinct micro-potential
SPECS = ("free", "prop41", "prop43_cauchy")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("effective_portraits.svg"))
    ap.add_argument("--n-p", type=int, default=2049)
    ap.add_argument("--p-max", type=float, default=2.5)
    args = ap.parse_args()

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_h, ax_l) = plt.subplots(1, 2, figsize=(9, 3.6))
    for name in SPECS:
        spec = catalog(name)
        eff = EffectiveHamiltonian1D.build(spec, p_max=args.p_max, n_p=args.n_p)
        pc = p_critical(spec.micro)
        print(f"{name:14s} micro={spec.micro.kind:14s} p_c={pc:.6f}")
        p = eff.micro_table.grid()
        ax_h.plot(p, eff.micro_table.values, label=f"{name} (p_c={pc:.3f})")
        v = np.linspace(-args.p_max, args.p_max, 513)
        ax_l.plot(v, [eff.lagrangian_at(float(vi)) for vi in v], label=name)
    ax_h.set_xlabel("p")
    ax_h.set_ylabel("averaged Hamiltonian")
    ax_h.legend(fontsize=8)
    ax_l.set_xlabel("v")
    ax_l.set_ylabel("averaged Lagrangian")
    fig.tight_layout()
    fig.savefig(args.out, metadata={"Date": None})
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
