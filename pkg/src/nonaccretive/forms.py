"""
Discrete sesquilinear form and signed gaps for the coercivity and lemma inequalities.

Every check returns an :class:`InequalityGap` whose ``gap`` is nonnegative when
the continuum inequality holds.  Discrete versions incur O(h^2) commutator
errors, so a check passes when ``gap >= -tol`` with ``tol = kappa h^2 * scale``
and ``scale`` the sum of the magnitudes entering both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import MagneticGradient, edge_gradient, _edge_endpoints
from .assumptions import Certificate
from .fields import ElectromagneticField
from .grid import Grid, random_compact_support

__all__ = [
    "WeightFunction",
    "InequalityGap",
    "DiscreteForm",
    "form_Q",
    "coercivity_gap",
    "coercivity_bound_gap",
    "lemma_gap",
    "graph_norm_estimate",
    "loc_convergence",
    "smooth_profile",
    "LEMMA_IDS",
    "KAPPA",
]

KAPPA = 10.0
LEMMA_IDS = ("BmBV", "loc", "nablaA", "B2")


@dataclass(frozen=True)
class WeightFunction:
    """Nodal weight ``W`` with its nodal gradient magnitude (central differences)."""

    values: np.ndarray
    grad_abs: np.ndarray
    label: str = "W"

    @classmethod
    def from_values(cls, grid: Grid, values, label="W"):
        values = np.asarray(values, dtype=float).reshape(grid.size)
        if not np.all(np.isfinite(values)):
            raise ValueError("weight values must be finite")
        arr = values.reshape(grid.shape)
        if grid.dim == 1:
            grads = [np.gradient(arr, grid.h[0])]
        else:
            grads = np.gradient(arr, *grid.h)
        g = np.sqrt(sum(gi**2 for gi in grads)).ravel()
        return cls(values, g, label)

    @classmethod
    def zero(cls, grid: Grid):
        return cls(np.zeros(grid.size), np.zeros(grid.size), "zero")

    @classmethod
    def clipped_ramp(cls, grid: Grid, height=1.0, axis=0):
        """``min(x_+, height)`` along one coordinate."""
        x = grid.points[axis]
        return cls.from_values(grid, np.minimum(np.maximum(x, 0.0), height), "ramp")

    @classmethod
    def agmon_cutoff(cls, grid: Grid, distance, n, eps=0.1):
        """``eta * chi_n(d)`` with ``chi_n(s) = s`` on [0, n], ``2n - s`` on [n, 2n], 0 beyond,
        and ``eta = sqrt(1 - eps)/3``."""
        s = np.asarray(distance, dtype=float)
        chi = np.where(s <= n, s, np.maximum(2 * n - s, 0.0))
        return cls.from_values(grid, np.sqrt(1 - eps) / 3 * chi, "agmon")


@dataclass
class InequalityGap:
    id: str
    lhs: float
    rhs: float
    gap: float
    tol: float
    asserted: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (not self.asserted) or self.gap >= -self.tol

    def to_dict(self) -> dict:
        return {"id": self.id, "lhs": self.lhs, "rhs": self.rhs, "gap": self.gap, "tol": self.tol,
                "asserted": self.asserted, "pass": self.passed}


class DiscreteForm:
    """Form machinery for one ``(field, grid)`` pair; caches the gradient and the sampled weights."""

    def __init__(self, field_: ElectromagneticField, grid: Grid, kappa=KAPPA):
        self.field = field_
        self.grid = grid
        self.kappa = kappa
        self.grad: MagneticGradient = edge_gradient(field_, grid)
        self.K = sum(D.getH() @ D for D in self.grad.ops).tocsr()
        self.w = field_.weights(grid.points)
        self.V = self.w.V
        self.h2 = float(np.max(grid.h)) ** 2

    # -- building blocks -----------------------------------------------------

    def _check(self, u):
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.grid.size,):
            raise ValueError(f"grid function has shape {u.shape}, grid has {self.grid.size} nodes")
        return u

    def _int(self, f, u) -> float:
        """``sum f |u|^2 h^d`` for a real nodal weight ``f``."""
        return float(self.grid.cell_volume * np.sum(f * np.abs(u) ** 2))

    def _tol(self, *terms) -> float:
        return self.kappa * self.h2 * float(sum(abs(t) for t in terms))

    def Q(self, u, v, mu=0.0) -> complex:
        u = self._check(u)
        v = self._check(v)
        g = self.grid
        return self.grad.inner(u, v) + g.inner(self.V * u, v) - complex(mu) * g.inner(u, v)

    def kinetic(self, u):
        """``(-i grad + A)^2 u`` without the potential."""
        return self.K @ self._check(u)

    def edge_weight_sq(self, chi) -> list:
        """Per-edge squared forward difference of a real nodal function (zero outside the grid)."""
        out = []
        for l, _ in enumerate(self.grad.ops):
            left, right = _edge_endpoints(self.grid, l)
            cl = np.where(left >= 0, chi[np.maximum(left, 0)], 0.0)
            cr = np.where(right >= 0, chi[np.maximum(right, 0)], 0.0)
            out.append(((cr - cl) / self.grid.h[l]) ** 2)
        return out

    def _edge_int(self, fe, u) -> float:
        """``sum_edges f_e (|u_a|^2 + |u_b|^2)/2 h^d``."""
        total = 0.0
        a2 = np.abs(u) ** 2
        for l, f in enumerate(fe):
            left, right = _edge_endpoints(self.grid, l)
            ua = np.where(left >= 0, a2[np.maximum(left, 0)], 0.0)
            ub = np.where(right >= 0, a2[np.maximum(right, 0)], 0.0)
            total += np.sum(f * 0.5 * (ua + ub))
        return float(self.grid.cell_volume * total)

    # -- theorem and lemma gaps ------------------------------------------------

    def coercivity_gap(self, u, mu=0.0, W: WeightFunction | None = None) -> InequalityGap:
        u = self._check(u)
        mu = complex(mu)
        w = self.w
        Wv = np.zeros(self.grid.size) if W is None else W.values
        gW = np.zeros(self.grid.size) if W is None else W.grad_abs
        e2W = np.exp(2 * Wv)
        lhs = self.Q(u, e2W * u, mu).real + self.Q(u, w.Phi * e2W * u, mu).imag
        eu = np.exp(Wv) * u
        kin = self.grad.norm_sq(eu)
        d = self.grid.dim
        integrand = (w.Phi * w.V2 + (w.absB / w.m) * w.absB / (12 * d) + w.V1 - mu.real - abs(mu.imag)
                     - 9 * (w.abs_grad_Phi**2 + w.abs_grad_Psi**2 + gW**2))
        pot = self._int(integrand, eu)
        rhs = 0.5 * kin + pot
        tol = self._tol(lhs, kin, self._int(np.abs(integrand), eu))
        return InequalityGap("coercivity", lhs, rhs, lhs - rhs, tol,
                             extra={"W": "none" if W is None else W.label})

    def coercivity_bound_gap(self, u, mu, cert: Certificate) -> InequalityGap:
        """``|Q_mu(u,u)| + |Q_mu(u,Phi u)| >= 1/2 ||Du||^2 + sum (g1|V| - Re mu - |Im mu| - g2)|u|^2 h^d``."""
        u = self._check(u)
        mu = complex(mu)
        lhs = abs(self.Q(u, u, mu)) + abs(self.Q(u, self.w.Phi * u, mu))
        kin = self.grad.norm_sq(u)
        f = cert.gamma1 * self.w.absV - mu.real - abs(mu.imag) - cert.gamma2
        pot = self._int(f, u)
        rhs = 0.5 * kin + pot
        return InequalityGap("coercivity_bound", lhs, rhs, lhs - rhs, self._tol(lhs, kin, self._int(np.abs(f), u)))

    def lemma_gap(self, lemma_id: str, u, chi=None, delta=None) -> InequalityGap:
        u = self._check(u)
        w = self.w
        if lemma_id == "BmBV":
            lhs = self._int(w.absB**2 / w.m, u)
            kin = self.grad.norm_sq(u)
            rhs = 3 * self.grid.dim * kin + self._int(w.abs_grad_Psi**2, u)
            return InequalityGap("BmBV", lhs, rhs, rhs - lhs, self._tol(lhs, rhs))
        if lemma_id == "loc":
            if chi is None:
                raise ValueError("lemma 'loc' needs a real nodal cutoff chi")
            chi = np.asarray(chi, dtype=float)
            lhs = self.grad.inner(u, chi**2 * u).real
            kin = self.grad.norm_sq(chi * u)
            grad_chi = self._edge_int(self.edge_weight_sq(chi), u)
            rhs = kin - grad_chi
            mismatch = abs(lhs - rhs)
            return InequalityGap("loc", lhs, rhs, -mismatch, self._tol(self.grad.norm_sq(u), kin, grad_chi))
        if lemma_id == "nablaA":
            if delta is None or delta <= 0:
                raise ValueError("lemma 'nablaA' needs delta > 0")
            g = self.grid
            lhs = 2 * self.grad.norm_sq(u)
            rhs = delta * g.norm(self.kinetic(u)) ** 2 + g.norm(u) ** 2 / delta
            return InequalityGap("nablaA", lhs, rhs, rhs - lhs, self._tol(lhs, rhs), extra={"delta": delta})
        if lemma_id == "B2":
            g = self.grid
            m_edge = self.grad.edge_average(w.m)
            weighted = float(g.cell_volume * sum(np.sum(me * np.abs(D @ u) ** 2)
                                                 for me, D in zip(m_edge, self.grad.ops)))
            lhs = self._int(w.absB**2, u) + weighted
            rhs = g.norm(self.kinetic(u)) ** 2 + self._int(w.absV**2, u) + g.norm(u) ** 2
            C = lhs / rhs if rhs > 0 else 0.0
            return InequalityGap("B2", lhs, rhs, C, np.inf, asserted=False, extra={"smallest_C": C})
        raise ValueError(f"unknown lemma id {lemma_id!r}; expected one of {LEMMA_IDS}")

    def graph_norm_estimate(self, delta, sample_size=200, seed=0, margin=0.1) -> float:
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        g = self.grid
        best = 0.0
        for k in range(sample_size):
            u = random_compact_support(g, margin, np.random.SeedSequence([seed, k]))
            Ku = self.kinetic(u)
            Vu = self.V * u
            bracket = (1 - delta) * (g.norm(Ku) ** 2 + g.norm(Vu) ** 2) - g.norm(Ku + Vu) ** 2
            best = max(best, bracket / g.norm(u) ** 2)
        return float(best)


def form_Q(field_, grid, u, v, mu=0.0) -> complex:
    return DiscreteForm(field_, grid).Q(u, v, mu)


def coercivity_gap(field_, grid, u, mu=0.0, W=None, cert=None) -> InequalityGap:
    # the theorem's right side does not involve the certificate; it is accepted for interface symmetry
    return DiscreteForm(field_, grid).coercivity_gap(u, mu, W)


def coercivity_bound_gap(field_, grid, u, mu, cert) -> InequalityGap:
    return DiscreteForm(field_, grid).coercivity_bound_gap(u, mu, cert)


def lemma_gap(lemma_id, field_, grid, u, chi=None, delta=None) -> InequalityGap:
    return DiscreteForm(field_, grid).lemma_gap(lemma_id, u, chi=chi, delta=delta)


def graph_norm_estimate(field_, grid, delta, sample_size=200, seed=0) -> float:
    return DiscreteForm(field_, grid).graph_norm_estimate(delta, sample_size, seed)


def smooth_profile(grid: Grid, width=0.12, shift=0.1, wavenumber=1.0):
    """Gaussian bump times a plane wave, centred slightly off the box centre."""
    lo, hi = np.array(grid.lower), np.array(grid.upper)
    c = (lo + hi) / 2 + shift * (hi - lo)
    s = width * float(np.min(hi - lo))
    r2 = np.sum((grid.points - c[:, None]) ** 2, axis=0)
    return np.exp(-r2 / (2 * s * s) + 1j * wavenumber * grid.points[0])


def loc_convergence(field_, grid: Grid, levels=3, max_coarse=(200, 48)) -> dict:
    """Localization-identity mismatch for a smooth profile and cutoff on successively refined grids.

    Starts from at most ``max_coarse[d-1]`` nodes per axis; returns spacings,
    mismatches and the fitted order ``d log(mismatch) / d log(h)``.
    """
    n0 = tuple(min(k, max_coarse[grid.dim - 1]) for k in grid.n)
    g = Grid(grid.lower, grid.upper, n0)
    hs, mism = [], []
    for _ in range(levels):
        df = DiscreteForm(field_, g)
        u = smooth_profile(g)
        lo, hi = np.array(g.lower), np.array(g.upper)
        c = (lo + hi) / 2
        chi = np.exp(-np.sum((g.points - c[:, None]) ** 2, axis=0) / (2 * (0.2 * float(np.min(hi - lo))) ** 2))
        hs.append(float(np.max(g.h)))
        mism.append(-df.lemma_gap("loc", u, chi=chi).gap)
        g = g.refine()
    mism = np.array(mism)
    if np.all(mism > 0):
        order = float(np.polyfit(np.log(hs), np.log(mism), 1)[0])
    else:
        order = float("inf")
    return {"h": hs, "mismatch": mism.tolist(), "order": order}
