"""Sweep every weight -2 contraction class over a test surface and report which integrate invariantly.

Single classes that come out invariant are the Gauss-Bonnet integrand and |ho|^2
(and anything that vanishes identically); H^2-type classes are falsified.
"""

import argparse
import csv
import sys

from confinv import ContractionSum, build_grid, enumerate_terms, invariance_sweep, load_surface
from confinv.tensor_algebra import format_term


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--surface", default="ellipsoid(1,1.3,0.8)")
    ap.add_argument("--codim", type=int, default=1)
    ap.add_argument("--resolution", type=int, default=48)
    args = ap.parse_args()

    f = load_surface(args.surface)
    grid = build_grid(f.domain, args.resolution)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["term", "max_abs_integral", "area", "verdict"])
    for term in enumerate_terms(-2, f.m, args.codim):
        rep = invariance_sweep(ContractionSum([(1.0, term)]), f, grid=grid)
        out.writerow([format_term(term), f"{rep.max_abs_integral:.3e}", f"{rep.area:.6f}", rep.verdict])


if __name__ == "__main__":
    main()
