"""
Walkthrough 2: eigenvalues, multiplicities and where they are allowed to sit.

We compute the three lowest eigenvalues of ``-d^2/dx^2 - x^2 + i x^3`` on
[-10, 10] with shift-invert Arnoldi, confirm each is algebraically simple with
a contour projector, and check that none lies in the half-plane region the
certificate declares free of spectrum.

Run: python3 demos/02_spectrum.py
"""

import numpy as np

from nonaccretive import (ElectromagneticField, Grid, assemble_operator, certify, classify, eigenpairs_near,
                          placement_check, resolvent_probe, riesz_projector)
from nonaccretive.eigensolve import richardson_values

field = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")
grid = Grid.box(10.0, 4000)
op = assemble_operator(field, grid)
cert = certify(field, grid)

pairs = eigenpairs_near(op, [0.0], k=3, polish=2)
fine = eigenpairs_near(assemble_operator(field, grid.refine()), [0.0], k=3)
extrapolated = richardson_values(pairs, fine)

print(f"certificate: gamma1 = {cert.gamma1:g}, gamma2 = {cert.gamma2:.3f}")
print(" eigenvalue                      residual   mult  region            h^2-extrapolated")
for p, ext in zip(pairs, extrapolated):
    others = [q.value for q in pairs if q is not p]
    radius = 0.5 * min(abs(p.value - o) for o in others)
    proj = riesz_projector(op, p.value, radius, probe_basis=p.vector)
    print(f" {p.value.real:10.6f} {p.value.imag:+.2e}i   {p.residual:.1e}   {proj.multiplicity:4d}  "
          f"{classify(p.value, cert):16s}  {ext.real:.8f}")

pc = placement_check(pairs, cert)
print(f"enclosure: {pc.violations} eigenvalues inside the spectrum-free region")

print()
print("resolvent norms inside the spectrum-free region against the bound 2/g:")
for g in (1.0, 5.0, 25.0):
    mu = -cert.gamma2 - g - 3.0 + 3.0j
    est = resolvent_probe(op, mu).norm_estimate
    print(f"  g = {g:5.1f}  mu = {mu.real:8.3f}{mu.imag:+.1f}i  ||(L - mu)^-1|| ~ {est:.4f}  <= {2 / g:.4f}")
