"""
Spectral enclosure arithmetic and domain-truncation studies.

``rho_c = {mu : -c - Re mu - |Im mu| > 0}`` is resolvent territory for
``c = gamma2`` and contains at most discrete spectrum for
``c = gamma2 - gamma1 * Vinf``.  Truncation studies track eigenvalues of
Dirichlet problems on growing boxes at a fixed spacing and compare the log-drift
with the Agmon distance from the base point to the box boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .agmon import agmon_distance
from .assembly import assemble_operator
from .assumptions import Certificate
from .eigensolve import Eigenpair, eigenpairs_near, refine_tridiagonal_eigenvalue
from .fields import ElectromagneticField
from .grid import Grid

__all__ = [
    "EnclosureRegion",
    "FredholmWindow",
    "classify",
    "estimate_vinf",
    "placement_check",
    "PlacementReport",
    "boundary_mass",
    "TruncationStudy",
    "TruncationTrace",
    "truncation_study",
    "RESOLVENT",
    "FREDHOLM",
    "OUTSIDE",
]

RESOLVENT = "resolvent"  # mu in rho_{gamma2}
FREDHOLM = "fredholm_window"  # mu in rho_{gamma2 - gamma1 Vinf} only
OUTSIDE = "outside"


@dataclass(frozen=True)
class EnclosureRegion:
    c: float

    def value(self, mu) -> float:
        mu = complex(mu)
        return -self.c - mu.real - abs(mu.imag)

    def contains(self, mu) -> bool:
        return self.value(mu) > 0

    __contains__ = contains


@dataclass(frozen=True)
class FredholmWindow:
    gamma1: float
    gamma2: float
    vinf: float

    @property
    def inner(self) -> EnclosureRegion:
        return EnclosureRegion(self.gamma2)

    @property
    def outer(self) -> EnclosureRegion:
        return EnclosureRegion(self.gamma2 - self.gamma1 * self.vinf)

    def gap(self, mu) -> float:
        """``gamma1 Vinf - Re mu - |Im mu| - gamma2``."""
        return self.outer.value(mu)

    def to_dict(self) -> dict:
        return {"gamma1": self.gamma1, "gamma2": self.gamma2, "vinf": self.vinf,
                "c_inner": self.inner.c, "c_outer": self.outer.c}


def classify(mu, cert: Certificate, vinf: float = 0.0) -> str:
    if vinf < 0:
        raise ValueError("Vinf estimate must be nonnegative")
    win = FredholmWindow(cert.gamma1, cert.gamma2, vinf)
    if win.inner.contains(mu):
        return RESOLVENT
    if win.outer.contains(mu):
        return FREDHOLM
    return OUTSIDE


def estimate_vinf(field_: ElectromagneticField, R: float, box_half_width: float, samples=2001) -> float:
    """Minimum of ``|V|`` over sampled ``{|x| >= R}`` inside ``[-b, b]^d``."""
    b = float(box_half_width)
    if R > b * math.sqrt(field_.dim) or R < 0:
        raise ValueError(f"shell |x| >= {R} is empty inside the box of half width {b}")
    if field_.dim == 1:
        if R > b:
            raise ValueError(f"shell |x| >= {R} is empty inside the box of half width {b}")
        s = np.linspace(R, b, samples)
        pts = np.concatenate([-s, s]).reshape(1, -1)
    else:
        n = int(max(math.isqrt(samples), 11))
        ax = np.linspace(-b, b, n)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        mask = np.hypot(X, Y) >= R
        # always include points on the circle itself
        t = np.linspace(0, 2 * np.pi, 4 * n, endpoint=False)
        circ = np.stack([R * np.cos(t), R * np.sin(t)])
        circ = circ[:, np.all(np.abs(circ) <= b, axis=0)]
        pts = np.concatenate([np.stack([X[mask], Y[mask]]), circ], axis=1)
        if pts.shape[1] == 0:
            raise ValueError(f"shell |x| >= {R} is empty inside the box of half width {b}")
    return float(np.min(np.abs(field_.V_at(pts))))


@dataclass
class PlacementReport:
    entries: list  # dicts: value, margin, considered, pass

    @property
    def violations(self) -> int:
        return sum(1 for e in self.entries if e["considered"] and not e["pass"])

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"entries": self.entries, "violations": self.violations, "pass": self.passed}


def placement_check(eigenvalues, cert: Certificate, certified=None) -> PlacementReport:
    """Every eigenvalue must satisfy ``-gamma2 - Re lam - |Im lam| <= 0``.

    ``certified`` (same length) marks pairs that passed the spurious-mode filter;
    unmarked pairs are listed but not judged.
    """
    vals = [p.value if isinstance(p, Eigenpair) else complex(p) for p in eigenvalues]
    if certified is None:
        certified = [True] * len(vals)
    region = EnclosureRegion(cert.gamma2)
    entries = []
    for lam, ok in zip(vals, certified):
        margin = region.value(lam)
        entries.append({"value": [lam.real, lam.imag], "margin": margin, "considered": bool(ok),
                        "pass": bool(margin <= 0)})
    return PlacementReport(entries)


def boundary_mass(grid: Grid, psi, layer=0.05) -> float:
    """Share of ``||psi||^2`` on nodes within ``layer`` (relative to the box width) of the boundary."""
    a2 = np.abs(np.asarray(psi)) ** 2
    near = grid.boundary_distance() < layer
    return float(np.sum(a2[near]) / np.sum(a2))


# -- truncation studies ----------------------------------------------------------


@dataclass
class TruncationTrace:
    reference: complex
    values: list  # per radius (complex or None)
    drifts: list  # per radius (float or None)
    agmon: list  # d_Ag from the base point to the box boundary, per radius
    slope: float | None
    decreasing: bool
    reliable: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"reference": [self.reference.real, self.reference.imag],
                "values": [None if v is None else [v.real, v.imag] for v in self.values],
                "drifts": self.drifts, "agmon": self.agmon, "slope": self.slope,
                "decreasing": self.decreasing, "reliable": self.reliable, "pass": self.passed}


@dataclass
class TruncationStudy:
    radii: list
    reference_radius: float
    h: float
    eps: float
    target_slope: float
    traces: list = field(default_factory=list)
    precision_digits: int | None = None

    @property
    def passed(self) -> bool:
        return bool(self.traces) and all(t.passed for t in self.traces)

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "reference_radius": self.reference_radius, "h": self.h,
                "eps": self.eps, "target_slope": self.target_slope, "precision_digits": self.precision_digits,
                "traces": [t.to_dict() for t in self.traces], "pass": self.passed}

    def csv_rows(self):
        yield ["trace", "R", "re_lambda", "im_lambda", "drift", "d_Ag_R"]
        for i, t in enumerate(self.traces):
            for R, v, dr, ag in zip(self.radii, t.values, t.drifts, t.agmon):
                yield [i, R, None if v is None else v.real, None if v is None else v.imag, dr, ag]


def _wkb_exponent(field_: ElectromagneticField, R: float, lam: complex, h: float) -> float:
    """``max over |x| <= R`` of ``int_0^x Re sqrt(V - lam)``, a decay exponent for 1D eigenvectors."""
    x = np.arange(0.0, R + h / 2, h)
    out = 0.0
    for sgn in (1, -1):
        v = field_.V_at((sgn * x).reshape(1, -1)) - lam
        out = max(out, float(cumulative_trapezoid(np.sqrt(v).real, x)[-1]))
    return out


def _solve_radius(field_, R, h, shifts, k, scheme, tol, layer):
    grid = Grid.with_spacing(R, h, field_.dim)
    op = assemble_operator(field_, grid, scheme)
    pairs = eigenpairs_near(op, shifts, k=k, tol=tol, polish=1)
    kept = [p for p in pairs if boundary_mass(grid, p.vector, layer) < 0.01]
    return grid, op, kept


def truncation_study(field_: ElectromagneticField, radii, shifts, eps, cert: Certificate, h,
                     reference_radius=None, k=3, scheme=None, tol=1e-8, n_track=None,
                     high_precision=True, layer=0.05) -> TruncationStudy:
    """Eigenvalue drift under box growth at fixed spacing ``h``.

    Reference eigenvalues come from the largest box (``reference_radius``,
    default ``max(radii) + 2``).  In 1D the matched eigenvalues are refined in
    extended precision, since drifts fall far below double rounding.  A trace
    passes when its drifts strictly decrease and the regression slope of
    ``log drift`` against ``d_Ag(R)`` is at most ``-(1 - eps)/3``.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be nondecreasing")
    R_ref = float(reference_radius) if reference_radius is not None else max(radii) + 2.0
    target = -(1 - eps) / 3
    ref_grid, ref_op, ref_pairs = _solve_radius(field_, R_ref, h, shifts, k, scheme, tol, layer)
    ref_pairs = sorted(ref_pairs, key=lambda p: (p.value.real, p.value.imag))
    if n_track is not None:
        ref_pairs = ref_pairs[:n_track]
    refvals = np.array([p.value for p in ref_pairs])
    if refvals.size > 1:
        gaps = np.abs(refvals[:, None] - refvals[None, :])[~np.eye(refvals.size, dtype=bool)]
        threshold = 0.5 * float(np.min(gaps))
    else:
        threshold = 0.5 * (1 + abs(refvals[0])) if refvals.size else 0.0

    one_d = field_.dim == 1 and high_precision
    digits = None
    if one_d and refvals.size:
        S = max(_wkb_exponent(field_, max(radii), lam, h) for lam in refvals)
        digits = int(30 + math.ceil(1.25 * 2 * S / math.log(10)))

    def refine(op, pair):
        if not one_d:
            return pair.value
        pivot = int(np.argmax(np.abs(pair.vector)))
        return refine_tridiagonal_eigenvalue(op, pair.value, dps=digits, pivot=pivot)

    ref_exact = [refine(ref_op, p) for p in ref_pairs]
    per_radius = [_solve_radius(field_, R, h, shifts, k, scheme, tol, layer) for R in radii]

    traces = []
    for j, rp in enumerate(ref_pairs):
        values, drifts, agm = [], [], []
        reliable = True
        for R, (grid, op, pairs) in zip(radii, per_radius):
            prof = agmon_distance(field_, grid, rp.value, cert)
            agm.append(prof.boundary_distance())
            if not pairs:
                values.append(None)
                drifts.append(None)
                reliable = False
                continue
            dist = [abs(p.value - rp.value) for p in pairs]
            i = int(np.argmin(dist))
            # injective matching: the chosen pair must be nearest to this reference among all references
            owner = int(np.argmin(np.abs(refvals - pairs[i].value)))
            if dist[i] > threshold or owner != j:
                values.append(None)
                drifts.append(None)
                reliable = False
                continue
            lam = refine(op, pairs[i])
            values.append(complex(lam))
            drifts.append(float(abs(lam - ref_exact[j])))
        ok_d = [d for d in drifts if d is not None]
        decreasing = reliable and all(b < a for a, b in zip(ok_d, ok_d[1:]))
        slope = None
        if reliable and all(d > 0 for d in ok_d) and len(set(agm)) > 1:
            slope = float(np.polyfit(agm, np.log(ok_d), 1)[0])
        if reliable and all(d == 0 for d in ok_d):
            # identical domains: nothing to converge
            passed = True
            decreasing = True
        else:
            passed = bool(reliable and decreasing and slope is not None and slope <= target)
        traces.append(TruncationTrace(complex(ref_exact[j]), values, drifts, agm, slope, decreasing,
                                      reliable, passed))
    return TruncationStudy(radii, R_ref, float(h), eps, target, traces, digits)
