"""
Grid certificates for the constants (gamma1, gamma2) of the weighted lower bound

    L(x) >= gamma1 |V(x)| - gamma2,

with ``L`` from :meth:`ElectromagneticField.assumption_lhs`, plus trend
diagnostics for the little-o growth conditions that imply it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import ElectromagneticField, _assumption_lhs
from .grid import Grid

__all__ = [
    "Certificate",
    "NoCertificate",
    "AsymptoticReport",
    "DEFAULT_GAMMA1_LADDER",
    "gamma2_of",
    "certify",
    "recheck_refined",
    "diagnose_asymptotics",
]

DEFAULT_GAMMA1_LADDER = tuple(2.0**k / 16 for k in range(9))
DEFAULT_GAMMA2_CAP = 20.0


class NoCertificate(RuntimeError):
    """No candidate gamma1 yields gamma2 under the cap."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table or []


@dataclass
class Certificate:
    gamma1: float
    gamma2: float
    grid: dict
    worst_point: np.ndarray
    margin_min: float
    margin_median: float
    histogram: tuple = ()  # (counts, edges) of the margin
    valid: bool = True
    table: list = field(default_factory=list)  # [(gamma1, gamma2)] for all candidates
    gamma2_cap: float | None = None

    def to_dict(self) -> dict:
        counts, edges = self.histogram if self.histogram else ([], [])
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "gamma2_cap": self.gamma2_cap,
            "grid": self.grid,
            "worst_point": [float(v) for v in np.atleast_1d(self.worst_point)],
            "margin_min": self.margin_min,
            "margin_median": self.margin_median,
            "margin_histogram": {"counts": [int(c) for c in counts], "edges": [float(e) for e in edges]},
            "valid": self.valid,
            "table": [[float(a), float(b)] for a, b in self.table],
        }

    @classmethod
    def manual(cls, gamma1, gamma2):
        """A certificate supplied by hand (no sampling record)."""
        if gamma1 <= 0:
            raise ValueError("gamma1 must be positive")
        return cls(float(gamma1), float(gamma2), {}, np.array([]), float("nan"), float("nan"))


def _sample(field_: ElectromagneticField, where):
    if isinstance(where, Grid):
        pts = where.points
        desc = where.describe()
    else:
        pts = np.asarray(where, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        desc = {"points": int(pts.shape[1])}
    if pts.shape[-1] == 0:
        raise ValueError("sampling set is empty")
    w = field_.weights(pts)
    return pts, desc, _assumption_lhs(w, field_.dim), w.absV


def gamma2_of(gamma1, L, absV) -> float:
    """``max(0, sup(gamma1 |V| - L))`` over the samples."""
    return float(max(0.0, np.max(gamma1 * absV - L)))


def certify(field_: ElectromagneticField, where, candidates=DEFAULT_GAMMA1_LADDER,
            gamma2_cap=DEFAULT_GAMMA2_CAP) -> Certificate:
    """Largest ladder value ``gamma1`` whose ``gamma2(gamma1)`` stays under ``gamma2_cap``.

    ``where`` is a :class:`Grid` or an array of sample points ``(d, n)``.
    Raises :class:`NoCertificate` when every candidate exceeds the cap.
    """
    cands = [float(c) for c in candidates]
    if not cands:
        raise ValueError("no gamma1 candidates")
    if any(c <= 0 for c in cands):
        raise ValueError("gamma1 candidates must be positive")
    if any(b < a for a, b in zip(cands, cands[1:])):
        raise ValueError("gamma1 candidates must be sorted ascending")
    pts, desc, L, absV = _sample(field_, where)
    table = [(c, gamma2_of(c, L, absV)) for c in cands]
    ok = [(c, g) for c, g in table if g <= gamma2_cap]
    if not ok:
        raise NoCertificate(f"no certificate under cap gamma2 <= {gamma2_cap}: "
                            + ", ".join(f"gamma1={c:g} needs gamma2={g:.4g}" for c, g in table), table)
    g1, g2 = ok[-1]
    return _build(pts, desc, L, absV, g1, g2, table, gamma2_cap)


def _build(pts, desc, L, absV, g1, g2, table, cap):
    margin = L - g1 * absV + g2
    flat = margin.ravel()
    worst = int(np.argmin(flat))
    counts, edges = np.histogram(flat, bins=10)
    return Certificate(
        gamma1=g1, gamma2=g2, grid=desc,
        worst_point=pts.reshape(pts.shape[0], -1)[:, worst].copy(),
        margin_min=float(flat[worst]), margin_median=float(np.median(flat)),
        histogram=(counts, edges), valid=bool(flat[worst] >= 0), table=table, gamma2_cap=cap,
    )


def recheck_refined(field_: ElectromagneticField, grid: Grid, cert: Certificate) -> dict:
    """Re-evaluate ``cert`` on the refined grid; report the margin drop and the gamma2 it would need."""
    fine = grid.refine()
    _, _, L, absV = _sample(field_, fine)
    margin = L - cert.gamma1 * absV + cert.gamma2
    need = gamma2_of(cert.gamma1, L, absV)
    return {
        "grid": fine.describe(),
        "margin_min": float(np.min(margin)),
        "margin_drop": float(cert.margin_min - np.min(margin)),
        "gamma2_needed": need,
        "still_valid": bool(np.min(margin) >= 0),
    }


# -- asymptotic trend diagnostics --------------------------------------------


@dataclass
class AsymptoticReport:
    radii: np.ndarray
    ratio_gradient: np.ndarray  # max (|grad V| + |grad B|) / m^{3/2} on the sphere
    ratio_negative: np.ndarray  # max (V1)_- / m on the sphere
    verdict_gradient: bool
    verdict_negative: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.verdict_gradient and self.verdict_negative

    def to_dict(self) -> dict:
        return {"radii": [float(r) for r in self.radii],
                "ratio_gradient": [float(r) for r in self.ratio_gradient],
                "ratio_negative": [float(r) for r in self.ratio_negative],
                "verdict_gradient": self.verdict_gradient, "verdict_negative": self.verdict_negative,
                "tol": self.tol, "verdict": "pass" if self.passed else "fail"}


def _sphere(dim, r, n_angles):
    if dim == 1:
        return np.array([[-r, r]])
    t = 2 * np.pi * np.arange(n_angles) / n_angles
    return np.stack([r * np.cos(t), r * np.sin(t)])


def _trend(seq, tol) -> bool:
    """Heuristic for a sequence tending to zero: finite, final value halves the first and sits under ``tol``."""
    seq = np.asarray(seq, dtype=float)
    if not np.all(np.isfinite(seq)):
        return False
    first, last = seq[0], seq[-1]
    return bool((last == 0 or last < 0.5 * first) and last < tol)


def diagnose_asymptotics(field_: ElectromagneticField, radii, tol=0.1, n_angles=64) -> AsymptoticReport:
    """Sample the two growth ratios on spheres of increasing radius and judge their trend."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise ValueError("need at least 4 radii")
    if np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise ValueError("radii must be nonnegative and strictly increasing")
    r1, r2 = [], []
    for r in radii:
        w = field_.weights(_sphere(field_.dim, r, n_angles))
        with np.errstate(over="ignore", invalid="ignore"):
            r1.append(float(np.max((w.abs_grad_V / w.m + w.abs_grad_B / w.m) / np.sqrt(w.m))))
            r2.append(float(np.max(np.maximum(-w.V1, 0.0) / w.m)))
    r1, r2 = np.array(r1), np.array(r2)
    return AsymptoticReport(radii, r1, r2, _trend(r1, tol), _trend(r2, tol), tol)
