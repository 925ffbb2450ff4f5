"""
Electromagnetic data (V, A) and the derived weights m, Phi, Psi.

Norm conventions: ``|B|`` and ``|grad B|`` sum over *all* ordered index pairs
(j, k), so a single physical component B_12 contributes twice.  ``|grad Psi|``
uses the same aggregation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex

__all__ = ["ElectromagneticField", "WeightSample", "Weights"]


@dataclass(frozen=True)
class WeightSample:
    """Pointwise weights at a single point ``x``."""

    x: np.ndarray
    V: complex
    V1: float
    V2: float
    absV: float
    B: np.ndarray  # d x d, skew
    absB: float
    m: float
    Phi: float
    Psi: np.ndarray  # d x d, skew
    grad_Phi: np.ndarray
    grad_Psi: np.ndarray  # d x d x d, [j, k, l] = d_l Psi_jk
    abs_grad_Phi: float
    abs_grad_Psi: float
    abs_grad_V: float
    abs_grad_B: float


def _fro(a, axes):
    """Euclidean norm over ``axes`` with scaling, so entries near the overflow limit stay finite."""
    a = np.abs(a)
    top = np.max(a, axis=axes, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    with np.errstate(invalid="ignore"):
        out = np.sqrt(np.sum((a / safe) ** 2, axis=axes)) * np.squeeze(top, axis=axes)
    return out


@dataclass(frozen=True)
class Weights:
    """Vectorised weights at many points; every array has the trailing point shape."""

    V: np.ndarray
    B: np.ndarray  # (d, d, ...)
    absB: np.ndarray
    m: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    grad_V: np.ndarray  # (d, ...), complex
    grad_B: np.ndarray  # (d, d, d, ...), [j, k, l]
    grad_m: np.ndarray
    grad_Phi: np.ndarray
    grad_Psi: np.ndarray

    @property
    def V1(self):
        return self.V.real

    @property
    def V2(self):
        return self.V.imag

    @property
    def absV(self):
        return np.abs(self.V)

    @property
    def abs_grad_Phi(self):
        return _fro(self.grad_Phi, (0,))

    @property
    def abs_grad_Psi(self):
        return _fro(self.grad_Psi, (0, 1, 2))

    @property
    def abs_grad_V(self):
        return _fro(self.grad_V, (0,))

    @property
    def abs_grad_B(self):
        return _fro(self.grad_B, (0, 1, 2))


@dataclass(frozen=True)
class ElectromagneticField:
    """Scalar potential ``V`` (complex) and vector potential ``A`` (real) in ``dim`` dimensions.

    Build with :meth:`from_strings` or directly from expression trees.  ``A`` may be
    ``None`` for a purely electric problem.
    """

    dim: int
    V: ex.Expr
    A: tuple | None = None
    _derived: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.A is not None:
            if len(self.A) != self.dim:
                raise ValueError(f"A needs {self.dim} components, got {len(self.A)}")
            object.__setattr__(self, "A", tuple(self.A))
        d = self.dim
        dV = tuple(ex.differentiate(self.V, j + 1) for j in range(d))
        if self.A is None:
            dA = None
            B = None
            dB = None
        else:
            # dA[k][j] = d_j A_k
            dA = tuple(tuple(ex.differentiate(self.A[k], j + 1) for j in range(d)) for k in range(d))
            B = [[ex.ZERO] * d for _ in range(d)]
            for j in range(d):
                for k in range(j + 1, d):
                    B[j][k] = ex._sub(dA[k][j], dA[j][k])
                    # exact negation keeps B_kj = -B_jk bitwise
                    B[k][j] = ex._neg(B[j][k])
            B = tuple(tuple(row) for row in B)
            dB = tuple(
                tuple(tuple(ex.differentiate(B[j][k], l + 1) for l in range(d)) for k in range(d))
                for j in range(d)
            )
        self._derived.update(dV=dV, dA=dA, B=B, dB=dB)

    @classmethod
    def from_strings(cls, dim: int, V: str, A: Sequence[str] | None = None) -> "ElectromagneticField":
        A_expr = None
        if A is not None and len(A) > 0:
            A_expr = tuple(ex.parse(a, dim) for a in A)
        return cls(dim, ex.parse(V, dim), A_expr)

    @property
    def has_magnetic(self) -> bool:
        return self.A is not None

    def fingerprint(self) -> str:
        text = ex.to_string(self.V) + "|" + ",".join(ex.to_string(a) for a in (self.A or ()))
        return hashlib.sha256(f"{self.dim}:{text}".encode()).hexdigest()[:16]

    # -- raw evaluations -------------------------------------------------

    def _points(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape[0] != self.dim:
            raise ValueError(f"points must have leading dimension {self.dim}, got shape {points.shape}")
        return points

    def V_at(self, points) -> np.ndarray:
        points = self._points(points)
        return np.asarray(ex.evaluate(self.V, points), dtype=complex) * np.ones(points.shape[1:])

    def A_at(self, points) -> np.ndarray:
        """Real array of shape ``(d, ...)``; zero when there is no vector potential."""
        points = self._points(points)
        shape = (self.dim,) + points.shape[1:]
        if self.A is None:
            return np.zeros(shape)
        out = np.empty(shape)
        for k, a in enumerate(self.A):
            val = np.asarray(ex.evaluate(a, points), dtype=complex) * np.ones(points.shape[1:])
            if np.any(np.abs(val.imag) > 1e-14 * np.maximum(np.abs(val), 1e-300)):
                raise ValueError(f"vector potential component A{k + 1} is not real-valued")
            out[k] = val.real
        return out

    def div_A_at(self, points) -> np.ndarray:
        points = self._points(points)
        total = np.zeros(points.shape[1:])
        if self.A is None:
            return total
        dA = self._derived["dA"]
        for k in range(self.dim):
            total = total + np.real(np.asarray(ex.evaluate(dA[k][k], points)) * np.ones(points.shape[1:]))
        return total

    def _eval_real(self, e, points):
        return np.real(np.asarray(ex.evaluate(e, points), dtype=complex)) * np.ones(points.shape[1:])

    # -- weights ---------------------------------------------------------

    def weights(self, points) -> Weights:
        """Evaluate V, B, m, Phi, Psi and their gradients at an array of points ``(d, ...)``."""
        points = self._points(points)
        d = self.dim
        shape = points.shape[1:]
        V = self.V_at(points)
        grad_V = np.stack([np.asarray(ex.evaluate(g, points), dtype=complex) * np.ones(shape)
                           for g in self._derived["dV"]])
        B = np.zeros((d, d) + shape)
        grad_B = np.zeros((d, d, d) + shape)
        if self.A is not None:
            Bx = self._derived["B"]
            dB = self._derived["dB"]
            for j in range(d):
                for k in range(d):
                    if j == k:
                        continue
                    B[j, k] = self._eval_real(Bx[j][k], points)
                    for l in range(d):
                        grad_B[j, k, l] = self._eval_real(dB[j][k][l], points)
        absB2 = np.sum(B**2, axis=(0, 1))
        absB = np.sqrt(absB2)
        # hypot chain avoids overflow of |V|^2 for fast-growing potentials
        m = np.hypot(np.hypot(1.0, absB), np.abs(V))
        Phi = V.imag / m
        Psi = B / m
        # d_l m = <B/m, d_l B>_F + Re(conj(V/m) d_l V); dividing first keeps huge potentials finite
        grad_m = np.einsum("jk...,jkl...->l...", Psi, grad_B) + np.real(np.conj(V / m) * grad_V)
        grad_Phi = (grad_V.imag - Phi * grad_m) / m
        grad_Psi = (grad_B - Psi[:, :, None] * grad_m[None, None]) / m
        return Weights(V=V, B=B, absB=absB, m=m, Phi=Phi, Psi=Psi, grad_V=grad_V, grad_B=grad_B,
                       grad_m=grad_m, grad_Phi=grad_Phi, grad_Psi=grad_Psi)

    def sample(self, x) -> WeightSample:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if not np.all(np.isfinite(x)):
            raise ValueError("sample point must be finite")
        w = self.weights(x.reshape(self.dim, 1))
        first = lambda a: a[..., 0]
        return WeightSample(
            x=x,
            V=complex(w.V[0]),
            V1=float(w.V1[0]),
            V2=float(w.V2[0]),
            absV=float(w.absV[0]),
            B=first(w.B),
            absB=float(w.absB[0]),
            m=float(w.m[0]),
            Phi=float(w.Phi[0]),
            Psi=first(w.Psi),
            grad_Phi=first(w.grad_Phi),
            grad_Psi=first(w.grad_Psi),
            abs_grad_Phi=float(w.abs_grad_Phi[0]),
            abs_grad_Psi=float(w.abs_grad_Psi[0]),
            abs_grad_V=float(w.abs_grad_V[0]),
            abs_grad_B=float(w.abs_grad_B[0]),
        )

    def assumption_lhs(self, points) -> np.ndarray:
        """L(x) = (V2^2 + |B|^2/(12 d))/m + V1 - 9(|grad Phi|^2 + |grad Psi|^2)."""
        points = self._points(points)
        w = self.weights(points)
        return _assumption_lhs(w, self.dim)


def _assumption_lhs(w: Weights, d: int) -> np.ndarray:
    # V2^2/m written as (V2/m)*V2 so that huge potentials do not overflow
    first = w.Phi * w.V2 + (w.absB / w.m) * w.absB / (12 * d)
    return first + w.V1 - 9.0 * (w.abs_grad_Phi**2 + w.abs_grad_Psi**2)
