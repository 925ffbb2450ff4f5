"""
Agmon distance for a discrete eigenvalue and certification of exponential decay.

The metric is ``w(x) dx^2`` with ``w = (g1 |V| - Re lam - |Im lam| - g2)_+``, so the
distance from a base node solves the eikonal equation ``|grad d| = sqrt(w)``:
exactly by cumulative trapezoidal quadrature in 1D, by first-order fast marching
in 2D.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .assumptions import Certificate
from .fields import ElectromagneticField
from .grid import Grid

__all__ = [
    "AgmonProfile",
    "DecayReport",
    "agmon_weight",
    "agmon_distance",
    "fast_marching",
    "certify_decay",
    "certify_generalized",
    "write_profile_csv",
]


@dataclass
class AgmonProfile:
    grid: Grid
    eigenvalue: complex
    gamma1: float
    gamma2: float
    base_node: int
    weight: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)

    @property
    def base_point(self) -> np.ndarray:
        return self.grid.points[:, self.base_node]

    def boundary_distance(self) -> float:
        """Smallest Agmon distance among nodes adjacent to the box boundary."""
        g = self.grid
        idx = np.indices(g.shape).reshape(g.dim, -1)
        edge = np.zeros(g.size, dtype=bool)
        for i in range(g.dim):
            edge |= (idx[i] == 0) | (idx[i] == g.n[i] - 1)
        return float(np.min(self.distance[edge]))


@dataclass
class DecayReport:
    eigenvalue: complex
    eps: float
    weighted_norm: float
    weighted_norm_enlarged: float | None
    slope: float | None
    target_slope: float
    slope_tol: float
    window_size: int
    verdict: str  # "pass", "fail" or "inconclusive"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {"eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag], "eps": self.eps,
                "weighted_norm": self.weighted_norm, "weighted_norm_enlarged": self.weighted_norm_enlarged,
                "slope": self.slope, "target_slope": self.target_slope, "slope_tol": self.slope_tol,
                "window_size": self.window_size, "verdict": self.verdict}


def agmon_weight(field: ElectromagneticField, grid: Grid, lam: complex, gamma1: float, gamma2: float) -> np.ndarray:
    lam = complex(lam)
    absV = np.abs(field.V_at(grid.points))
    return np.maximum(gamma1 * absV - lam.real - abs(lam.imag) - gamma2, 0.0)


def agmon_distance(field: ElectromagneticField, grid: Grid, lam: complex, cert: Certificate,
                   x0=None) -> AgmonProfile:
    """Agmon distance from the node nearest ``x0`` (default: origin, or the box centre)."""
    w = agmon_weight(field, grid, lam, cert.gamma1, cert.gamma2)
    base = grid.default_base_node() if x0 is None else grid.nearest_node(x0)
    dist = eikonal_distance(grid, w, base)
    return AgmonProfile(grid, complex(lam), cert.gamma1, cert.gamma2, base, w, dist)


def eikonal_distance(grid: Grid, w: np.ndarray, base: int) -> np.ndarray:
    speed = np.sqrt(np.maximum(w, 0.0))
    if grid.dim == 1:
        x = grid.axes[0]
        run = cumulative_trapezoid(speed, x, initial=0.0)
        return np.abs(run - run[base])
    return fast_marching(speed.reshape(grid.shape), tuple(grid.h), np.unravel_index(base, grid.shape)).ravel()


def fast_marching(speed: np.ndarray, h: tuple, source: tuple) -> np.ndarray:
    """First-order fast marching for ``|grad d| = speed`` on a 2D grid, ``d(source) = 0``.

    The eight neighbours of the source are initialised with the trapezoidal
    straight-line distance to cut the start-up error of the upwind scheme.
    """
    ny, nx = speed.shape
    hx, hy = h
    d = np.full(speed.shape, np.inf)
    frozen = np.zeros(speed.shape, dtype=bool)
    heap = []
    i0, j0 = source
    d[i0, j0] = 0.0
    heapq.heappush(heap, (0.0, i0, j0))
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            i, j = i0 + di, j0 + dj
            if (di or dj) and 0 <= i < ny and 0 <= j < nx:
                r = np.hypot(di * hx, dj * hy)
                d[i, j] = 0.5 * (speed[i0, j0] + speed[i, j]) * r
                heapq.heappush(heap, (d[i, j], i, j))

    def update(i, j):
        a = min(d[i - 1, j] if i > 0 and frozen[i - 1, j] else np.inf,
                d[i + 1, j] if i < ny - 1 and frozen[i + 1, j] else np.inf)
        b = min(d[i, j - 1] if j > 0 and frozen[i, j - 1] else np.inf,
                d[i, j + 1] if j < nx - 1 and frozen[i, j + 1] else np.inf)
        f = speed[i, j]
        cand = min(a + f * hx, b + f * hy)
        if np.isfinite(a) and np.isfinite(b):
            # solve ((t-a)/hx)^2 + ((t-b)/hy)^2 = f^2 for the larger root
            A = 1 / hx**2 + 1 / hy**2
            B = -2 * (a / hx**2 + b / hy**2)
            C = a**2 / hx**2 + b**2 / hy**2 - f**2
            disc = B * B - 4 * A * C
            if disc >= 0:
                t = (-B + np.sqrt(disc)) / (2 * A)
                if t >= max(a, b):
                    cand = min(cand, t)
        return cand

    while heap:
        t, i, j = heapq.heappop(heap)
        if frozen[i, j] or t > d[i, j]:
            continue
        frozen[i, j] = True
        for ii, jj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ii < ny and 0 <= jj < nx and not frozen[ii, jj]:
                t_new = update(ii, jj)
                if t_new < d[ii, jj]:
                    d[ii, jj] = t_new
                    heapq.heappush(heap, (t_new, ii, jj))
    return d


def _weighted_norm(profile: AgmonProfile, psi, eps) -> float:
    g = profile.grid
    psi = np.asarray(psi)
    psi = psi / g.norm(psi)
    rate = (1 - eps) / 3
    # scale inside the exponent so that huge weights do not overflow before meeting tiny tails
    with np.errstate(divide="ignore"):
        logs = 2 * (rate * profile.distance + np.log(np.abs(psi)))
    top = np.max(logs)
    return float(np.exp(0.5 * top) * np.sqrt(g.cell_volume * np.sum(np.exp(logs - top))))


def certify_decay(profile: AgmonProfile, psi, eps=0.1, floor=1e-10, cap=1e-2, slope_tol=None,
                  enlarged: tuple | None = None) -> DecayReport:
    """Check ``exp((1-eps)/3 d_Ag) psi`` in L^2 through a log-slope fit and a box-enlargement test.

    The slope of ``log|psi|`` against ``d_Ag`` is fitted on nodes with
    ``floor <= |psi| <= cap`` and ``d_Ag`` at or above the window median.  The
    verdict passes when the slope is at most ``-(1-eps)/3 + slope_tol`` and, if
    ``enlarged = (profile2, psi2)`` is given, the weighted norm changes by at most 2x.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    target = -(1 - eps) / 3
    slope_tol = 0.05 * (1 - eps) / 3 if slope_tol is None else slope_tol
    g = profile.grid
    psi = np.asarray(psi) / g.norm(psi)
    wn = _weighted_norm(profile, psi, eps)
    wn2 = None
    stable = True
    if enlarged is not None:
        wn2 = _weighted_norm(enlarged[0], enlarged[1], eps)
        stable = max(wn, wn2) <= 2 * min(wn, wn2)
    lam = profile.eigenvalue
    if np.max(profile.distance) == 0.0:
        # no decay is asserted: exp(0) psi = psi is in L^2
        return DecayReport(lam, eps, wn, wn2, None, target, slope_tol, 0, "pass" if stable else "fail")
    amp = np.abs(psi)
    win = (amp >= floor) & (amp <= cap)
    if np.any(win):
        win &= profile.distance >= np.median(profile.distance[win])
    n = int(win.sum())
    if n < 3 or np.ptp(profile.distance[win]) == 0:
        return DecayReport(lam, eps, wn, wn2, None, target, slope_tol, n, "inconclusive")
    slope = float(np.polyfit(profile.distance[win], np.log(amp[win]), 1)[0])
    ok = slope <= target + slope_tol and stable
    return DecayReport(lam, eps, wn, wn2, slope, target, slope_tol, n, "pass" if ok else "fail")


def certify_generalized(profile: AgmonProfile, projector_result, eps=0.1, **kw) -> list:
    """One :class:`DecayReport` per orthonormal basis vector of the projector range."""
    basis = np.asarray(projector_result.basis)
    return [certify_decay(profile, basis[:, j], eps, **kw) for j in range(basis.shape[1])]


def write_profile_csv(path, profile: AgmonProfile, psi):
    g = profile.grid
    psi = np.asarray(psi) / g.norm(psi)
    amp = np.abs(psi)
    names = [f"x{i + 1}" for i in range(g.dim)] + ["d_Ag", "abs_psi", "log_abs_psi"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(names)
        with np.errstate(divide="ignore"):
            logs = np.log(amp)
        for k in range(g.size):
            wr.writerow([repr(float(c)) for c in g.points[:, k]]
                        + [repr(float(profile.distance[k])), repr(float(amp[k])), repr(float(logs[k]))])
