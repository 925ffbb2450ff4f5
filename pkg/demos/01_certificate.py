"""
Walkthrough 1: is the potential admissible?

The theory behind the toolkit needs a pointwise lower bound of the form
``L(x) >= gamma1 |V(x)| - gamma2``, where ``L`` mixes the imaginary part of V,
the magnetic field and the gradients of the normalised multipliers.  Here we
sample that bound for the non-accretive potential ``-x^2 + i x^3`` and for a
real linear potential, which fails it.

Run: python3 demos/01_certificate.py
"""

import numpy as np

from nonaccretive import ElectromagneticField, Grid, NoCertificate, certify, diagnose_asymptotics
from nonaccretive.assumptions import recheck_refined

paradigm = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")
grid = Grid.box(10.0, 4001)

cert = certify(paradigm, grid)
print("paradigm potential -x^2 + i x^3 on [-10, 10], 4001 nodes")
print(f"  certificate gamma1 = {cert.gamma1:g}, gamma2 = {cert.gamma2:.4f}")
print(f"  tightest point x = {cert.worst_point[0]:+.4f}")
print("  gamma2 needed by each rung of the gamma1 ladder:")
for g1, g2 in cert.table:
    print(f"    gamma1 = {g1:6.4f}   gamma2 = {g2:10.4f}")

rc = recheck_refined(paradigm, grid, cert)
print(f"  on the 2x refined grid the margin drops by {rc['margin_drop']:.2e}; "
      f"gamma2 needed there: {rc['gamma2_needed']:.4f}")

rep = diagnose_asymptotics(paradigm, [2, 5, 10, 20, 40])
print("  growth ratios on spheres of radius 2..40:")
print("    gradient ratio", np.array2string(rep.ratio_gradient, precision=3))
print("    negative ratio", np.array2string(rep.ratio_negative, precision=3))
print(f"  trend verdict: {'pass' if rep.passed else 'fail'}")

print()
linear = ElectromagneticField.from_strings(1, "x1")
print("real linear potential x: the needed gamma2 grows with the box")
for R in (10, 20, 40, 80):
    try:
        c = certify(linear, Grid.box(R, 40 * R + 1), gamma2_cap=20)
        print(f"  R = {R:3d}: certified with gamma2 = {c.gamma2:.2f}")
    except NoCertificate as exc:
        best = min(g for _, g in exc.table)
        print(f"  R = {R:3d}: no certificate under cap 20 (smallest gamma2 needed {best:.1f})")
