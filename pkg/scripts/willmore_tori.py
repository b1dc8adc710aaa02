"""Willmore energy of round tori torus(R, 1) as R varies; the minimum 2 pi^2 sits at R = sqrt(2)."""

import argparse
import csv
import math
import sys

import numpy as np

from confinv import torus, willmore


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=1.1)
    ap.add_argument("--hi", type=float, default=3.0)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--resolution", type=int, default=48)
    args = ap.parse_args()

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["R", "willmore", "ratio_to_2pi2", "est_error"])
    radii = np.append(np.linspace(args.lo, args.hi, args.steps), math.sqrt(2))
    for R in sorted(radii):
        rep = willmore(torus(float(R), 1.0), grid=args.resolution)
        out.writerow([f"{R:.6f}", f"{rep.value:.10f}", f"{rep.value / (2 * math.pi**2):.10f}", f"{rep.est_error:.2e}"])


if __name__ == "__main__":
    main()
