"""
Walkthrough 3: exponential decay measured in the Agmon distance.

For each eigenfunction the Agmon weight ``(gamma1 |V| - Re lam - |Im lam| - gamma2)_+``
defines a distance from the origin.  The decay statement says that
``exp((1 - eps)/3 d_Ag) psi`` stays square integrable; numerically we fit the
slope of ``log|psi|`` against ``d_Ag`` and compare the weighted norm on two box
sizes.  The profiles are written as CSV for plotting.

Run: python3 demos/03_agmon_decay.py [output_dir]
"""

import os
import sys

from nonaccretive import ElectromagneticField, Grid, agmon_distance, assemble_operator, certify, certify_decay
from nonaccretive import eigenpairs_near
from nonaccretive.agmon import write_profile_csv

out = sys.argv[1] if len(sys.argv) > 1 else "demo_output"
os.makedirs(out, exist_ok=True)

field = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")
cert = certify(field, Grid.box(10.0, 4001))
eps = 0.1

solved = {}
for R in (10.0, 12.0):
    g = Grid.with_spacing(R, 0.005)
    solved[R] = (g, eigenpairs_near(assemble_operator(field, g), [0.0], k=3, polish=2))

print(f"target slope -(1 - eps)/3 = {-(1 - eps) / 3:.4f}")
for i, p in enumerate(solved[10.0][1]):
    g10 = solved[10.0][0]
    g12, pairs12 = solved[12.0]
    q = min(pairs12, key=lambda r: abs(r.value - p.value))
    prof = agmon_distance(field, g10, p.value, cert)
    prof12 = agmon_distance(field, g12, q.value, cert)
    rep = certify_decay(prof, p.vector, eps, enlarged=(prof12, q.vector))
    print(f"lambda = {p.value.real:.5f}{p.value.imag:+.1e}i  slope {rep.slope:+.3f}  "
          f"weighted norm R=10 {rep.weighted_norm:.5f}  R=12 {rep.weighted_norm_enlarged:.5f}  {rep.verdict}")
    write_profile_csv(os.path.join(out, f"agmon_profile_{i}.csv"), prof, p.vector)
print(f"profiles written to {out}/agmon_profile_*.csv")
