#!/usr/bin/env python3
"""Compare the three independent routes to the second-order coefficient of
the boundary difference map:

  1. the line-integral assembly (boundary_m2), with each term exposed;
  2. the exact per-zone energy-bookkeeping expansion (boundary_expansion);
  3. a simulated epsilon-ladder fit (numeric_melnikov, m2_hat).

Route 2 involves no quadrature and is the arbiter. On the saddle-center
preset with an odd boundary function the divided integrals of route 1
carry a non-cancelling logarithmic divergence, so the assembly has no
finite value there; the script shows that failure mode explicitly.

Usage:  python3 scripts/second_order_routes.py
"""

from pwmelnikov import presets
from pwmelnikov.errors import AnalysisError
from pwmelnikov.melnikov import boundary_expansion, boundary_m1, boundary_m2
from pwmelnikov.simulator import numeric_melnikov

CASES = [
    ("center-center, f = x^3 - x",
     presets.center_center(boundary_f="x^3 - x", r_min=0.2, r_max=1.4),
     (0.5, 0.9)),
    ("smooth-circle, f = sin(x)",
     presets.smooth_circle(boundary_f="sin(x)"), (0.8,)),
    ("saddle-center (a = 7), f = cos(x)",
     presets.saddle_center(a_param=7.0, boundary_f="cos(x)"), (0.5,)),
    ("saddle-center (a = 7), f = sin(x)",
     presets.saddle_center(a_param=7.0, boundary_f="sin(x)"), (0.5,)),
]


def main():
    for label, sys_, radii in CASES:
        print(f"\n=== {label} ===")
        for r in radii:
            exp = boundary_expansion(sys_, r)
            m1v = boundary_m1(sys_, r).value
            nm = numeric_melnikov(sys_, r, analytic_m1=m1v)
            print(f"r = {r}")
            print(f"  expansion (exact):   M1 = {exp.m1:+.9e}   "
                  f"M2 = {exp.m2:+.9e}")
            try:
                asm = boundary_m2(sys_, r)
                print(f"  integral assembly:   M2 = {asm.value:+.9e}   "
                      f"(log residual {asm.log_residual:.1e})")
                for name, val in asm.terms.items():
                    print(f"      {name:12s} {val:+.6e}")
            except AnalysisError as exc:
                print(f"  integral assembly:   no finite value: {exc}")
            print(f"  simulated ladder:    M2_hat = {nm.m2_hat:+.9e}")


if __name__ == "__main__":
    main()
