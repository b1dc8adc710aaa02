"""Gap between P_ab and 8 pi^2 / 3 for ellipsoids (1,1,1,1,c) in R^5 as the last semiaxis c grows."""

import argparse
import csv
import math
import sys

import numpy as np

from confinv import ellipsoid, energy_P4, energy_Pab


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--beta", type=float, default=6.0)
    ap.add_argument("--semiaxes", type=float, nargs="+", default=list(np.round(np.linspace(1.0, 2.0, 6), 3)))
    ap.add_argument("--resolution", type=int, default=16)
    args = ap.parse_args()

    bound = 8 * math.pi**2 / 3
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["c", "P_ab", "P_ab_minus_bound", "P4", "P4_min_integrand"])
    for c in args.semiaxes:
        f = ellipsoid(1, 1, 1, 1, c)
        pab = energy_Pab(f, args.alpha, args.beta, grid=args.resolution)
        p4 = energy_P4(f, grid=args.resolution)
        out.writerow([c, f"{pab.value:.8f}", f"{pab.value - bound:.3e}", f"{p4.value:.8f}", f"{p4.min_integrand:.4f}"])


if __name__ == "__main__":
    main()
