"""
Walkthrough 6: a constant magnetic field in two gauges.

``A = (0, x1)`` and ``A = (-x2/2, x1/2)`` describe the same field ``B12 = 1``.
With Peierls phases on the grid edges the two discrete operators are unitarily
equivalent, so their spectra agree to rounding.

Run: python3 demos/06_gauge.py
"""

import numpy as np

from nonaccretive import ElectromagneticField, Grid, assemble_operator, eigenpairs_near

grid = Grid.box(6.0, 71, dim=2)
spectra = {}
for name, A in (("Landau", ["0", "x1"]), ("symmetric", ["-x2/2", "x1/2"])):
    op = assemble_operator(ElectromagneticField.from_strings(2, "x1^2 + x2^2", A), grid)
    pairs = eigenpairs_near(op, [0.0], k=5)
    spectra[name] = np.array(sorted(p.value.real for p in pairs))
    print(f"{name:9s} gauge: " + "  ".join(f"{v:.10f}" for v in spectra[name]))
print(f"largest difference: {np.max(np.abs(spectra['Landau'] - spectra['symmetric'])):.2e}")
