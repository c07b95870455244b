#!/usr/bin/env python3
"""Sweep the first- and second-order boundary Melnikov functions over each
built-in preset and report the detected limit cycles with their stability.

Usage:  python3 scripts/sweep_presets.py [--grid N]
"""

import argparse

import numpy as np

from pwmelnikov import presets
from pwmelnikov.bifurcation import count_cycles
from pwmelnikov.errors import AnalysisError
from pwmelnikov.melnikov import boundary_m1, boundary_m2

CASES = [
    ("center-center", dict(boundary_f="x^3 - x", r_min=0.2, r_max=1.4)),
    ("saddle-center", dict(a_param=7.0, boundary_f="sin(x)")),
    ("smooth-circle", dict(boundary_f="sin(x)")),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=9,
                    help="number of sample radii to print per preset")
    args = ap.parse_args()

    for name, kwargs in CASES:
        sys_ = presets.make(name, **kwargs)
        an = sys_.annulus
        print(f"\n=== {name}  (annulus r in [{an.r_min}, {an.r_max}]) ===")
        print(f"{'r':>8}  {'M1':>14}  {'M2':>14}")
        for r in np.linspace(an.r_min, an.r_max, args.grid):
            r = float(r)
            m1v = boundary_m1(sys_, r).value
            try:
                m2v = f"{boundary_m2(sys_, r).value:14.6e}"
            except AnalysisError:
                m2v = f"{'--':>14}"
            print(f"{r:8.4f}  {m1v:14.6e}  {m2v}")

        reports = count_cycles(sys_)
        if not reports:
            print("no simple zeros of M1 in the annulus")
        for rep in reports:
            tag = "stable" if rep.stability.stable else "unstable"
            print(f"limit cycle near r* = {rep.root.r_star:.12f}  "
                  f"({tag}, criterion {rep.stability.criterion_value:+.4f})")


if __name__ == "__main__":
    main()
