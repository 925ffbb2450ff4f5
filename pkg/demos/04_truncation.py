"""
Walkthrough 4: how fast do eigenvalues settle as the box grows?

At a fixed spacing h we solve on boxes of half width 6, 8, 10, 12 and compare
with a reference box of half width 14.  The drift should shrink like
``exp(-c d_Ag(R))`` with ``d_Ag(R)`` the Agmon distance to the box boundary.
The drifts go far below double precision, so each matched eigenvalue is polished
in extended precision.

Run: python3 demos/04_truncation.py
"""

from nonaccretive import ElectromagneticField, Grid, certify, truncation_study

field = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")
cert = certify(field, Grid.box(10.0, 4001))
study = truncation_study(field, [6, 8, 10, 12], [0.0], 0.1, cert, h=0.01, reference_radius=14, k=3)

print(f"reference half width {study.reference_radius}, h = {study.h}, {study.precision_digits} digits")
for t in study.traces:
    print(f"\nreference eigenvalue {t.reference.real:.10f}{t.reference.imag:+.3e}i")
    print("    R     d_Ag(R)        drift")
    for R, ag, dr in zip(study.radii, t.agmon, t.drifts):
        print(f"  {R:4.0f}  {ag:9.3f}   {dr:.3e}")
    print(f"  slope of log drift vs d_Ag: {t.slope:.3f} (needs <= {study.target_slope:.3f}), "
          f"decreasing: {t.decreasing}")
