"""
Eigenpairs, Riesz projectors and resolvent norms of sparse non-Hermitian operators.

Shifted systems are factorised once and reused: LAPACK band LU (``gbtrf``) when
the bandwidth is small, SuperLU otherwise, dense LU for small dense input.  The
eigensolver is a Krylov-Schur restarted Arnoldi iteration on ``(L - sigma)^{-1}``
with classical Gram-Schmidt and one reorthogonalisation pass.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .assembly import SparseComplexOperator

log = logging.getLogger(__name__)

__all__ = [
    "Eigenpair",
    "ProjectorResult",
    "ResolventProbe",
    "FactorizationError",
    "ConvergenceError",
    "IllSeparatedContour",
    "ShiftedFactor",
    "shift_invert_arnoldi",
    "eigenpairs_near",
    "riesz_projector",
    "resolvent_probe",
    "refine_tridiagonal_eigenvalue",
    "richardson_values",
]


class FactorizationError(RuntimeError):
    """``L - sigma`` is (numerically) singular."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, converged=()):
        super().__init__(message)
        self.converged = list(converged)


class IllSeparatedContour(RuntimeError):
    pass


@dataclass
class Eigenpair:
    value: complex
    vector: np.ndarray
    residual: float  # ||L psi - lambda psi|| / (1 + |lambda|) with ||psi|| = 1
    shift: complex
    iterations: int
    multiplicity: int | None = None

    def to_dict(self) -> dict:
        out = {"re": self.value.real, "im": self.value.imag, "residual": self.residual,
               "shift": [complex(self.shift).real, complex(self.shift).imag], "iterations": self.iterations}
        if self.multiplicity is not None:
            out["multiplicity"] = self.multiplicity
        return out


@dataclass
class ProjectorResult:
    center: complex
    radius: float
    n_quad: int
    trace: complex
    multiplicity: int
    idempotency_defect: float
    norm: float  # ||P|| on the probed subspace
    trace_change_doubled: float  # |trace(N_q) - trace(2 N_q)|
    basis: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "radius": self.radius, "n_quad": self.n_quad,
                "trace": [self.trace.real, self.trace.imag], "multiplicity": self.multiplicity,
                "idempotency_defect": self.idempotency_defect, "norm": self.norm,
                "trace_change_doubled": self.trace_change_doubled}


@dataclass
class ResolventProbe:
    mu: complex
    norm_estimate: float
    solve_residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {"mu": [self.mu.real, self.mu.imag], "norm_estimate": self.norm_estimate,
                "solve_residual": self.solve_residual, "iterations": self.iterations}


def _as_matrix(op):
    if isinstance(op, SparseComplexOperator):
        return op.matrix
    if sp.issparse(op):
        return sp.csr_matrix(op)
    return np.asarray(op)


def _cell_volume(op) -> float:
    return op.grid.cell_volume if isinstance(op, SparseComplexOperator) else 1.0


def _bandwidth(M) -> int:
    C = M.tocoo()
    if C.nnz == 0:
        return 0
    return int(np.max(np.abs(C.row - C.col)))


class ShiftedFactor:
    """LU factorisation of ``M - shift*I`` with solves for ``N`` and ``H`` (conjugate transpose)."""

    def __init__(self, M, shift, check=True, pivot_tol=1e-14):
        self.shift = complex(shift)
        self.n = M.shape[0]
        if not sp.issparse(M):
            A = np.asarray(M, dtype=complex) - self.shift * np.eye(self.n)
            self.kind = "dense"
            with warnings.catch_warnings():
                # singularity is detected from the pivots below
                warnings.simplefilter("ignore", la.LinAlgWarning)
                self._lu = la.lu_factor(A, check_finite=False)
            diag = np.abs(np.diag(self._lu[0]))
        else:
            A = (sp.csr_matrix(M, dtype=complex) - self.shift * sp.identity(self.n, format="csr")).tocsc()
            bw = _bandwidth(A)
            if bw <= 4:
                self.kind = "banded"
                self.kl = self.ku = max(bw, 1)
                ab = np.zeros((2 * self.kl + self.ku + 1, self.n), dtype=complex)
                C = A.tocoo()
                ab[self.kl + self.ku + C.row - C.col, C.col] = C.data
                lu, piv, info = lapack.zgbtrf(ab, self.kl, self.ku)
                if info > 0:
                    raise FactorizationError(f"exactly singular at shift {self.shift}")
                self._lu = (lu, piv)
                diag = np.abs(lu[self.kl + self.ku])
            else:
                self.kind = "sparse"
                try:
                    self._lu = spla.splu(A, permc_spec="COLAMD")
                except RuntimeError as err:
                    raise FactorizationError(f"{err} at shift {self.shift}") from err
                diag = np.abs(self._lu.U.diagonal())
        if check and (diag.size == 0 or diag.min() <= pivot_tol * max(diag.max(), 1e-300)):
            raise FactorizationError(f"numerically singular at shift {self.shift}")

    def solve(self, b, trans="N"):
        b = np.asarray(b, dtype=complex)
        if self.kind == "dense":
            return la.lu_solve(self._lu, b, trans=0 if trans == "N" else 2, check_finite=False)
        if self.kind == "banded":
            lu, piv = self._lu
            x, info = lapack.zgbtrs(lu, self.kl, self.ku, b, piv, trans=0 if trans == "N" else 2)
            return x
        return self._lu.solve(b, trans="N" if trans == "N" else "H")


def _residual(M, lam, x):
    x = x / np.linalg.norm(x)
    return float(np.linalg.norm(M @ x - lam * x) / (1 + abs(lam)))


def shift_invert_arnoldi(op, shift, k=6, m=None, tol=1e-8, max_restarts=60, seed=0, polish=0):
    """Eigenpairs of ``op`` nearest ``shift``.

    Ritz values ``theta`` of ``(op - shift)^{-1}`` map back as ``shift + 1/theta``;
    every returned pair is re-checked against ``op`` itself.  ``polish`` extra
    inverse-iteration steps (at a shift next to each eigenvalue) clean the
    eigenvector tails.  Results are ordered by ``|lambda - shift|``.
    """
    M = _as_matrix(op)
    N = M.shape[0]
    if m is None:
        m = min(N, max(2 * k + 1, 20))
    if not (1 <= k <= m <= N):
        raise ValueError(f"need 1 <= k <= m <= N, got k={k}, m={m}, N={N}")
    shift = complex(shift)
    fac = ShiftedFactor(M, shift)
    rng = np.random.default_rng(seed)

    V = np.zeros((N, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    V[:, 0] = v0 / np.linalg.norm(v0)
    j0 = 0
    converged = []
    for restart in range(max_restarts + 1):
        for j in range(j0, m):
            w = fac.solve(V[:, j])
            Vj = V[:, : j + 1]
            h = Vj.conj().T @ w
            w = w - Vj @ h
            h2 = Vj.conj().T @ w
            w = w - Vj @ h2
            h = h + h2
            H[: j + 1, j] = h
            beta = np.linalg.norm(w)
            if beta > 1e-12 * max(np.linalg.norm(h), 1e-300):
                H[j + 1, j] = beta
                V[:, j + 1] = w / beta
                continue
            # invariant subspace: continue with a fresh orthogonal direction
            H[j + 1, j] = 0.0
            V[:, j + 1] = 0.0
            if j + 1 < N:
                for _ in range(3):
                    r = rng.standard_normal(N) + 1j * rng.standard_normal(N)
                    r -= Vj @ (Vj.conj().T @ r)
                    r -= Vj @ (Vj.conj().T @ r)
                    nr = np.linalg.norm(r)
                    if nr > 1e-8:
                        V[:, j + 1] = r / nr
                        break

        Hm = H[:m, :m]
        theta, Y = la.eig(Hm)
        order = np.argsort(-np.abs(theta), kind="stable")
        wanted = [i for i in order[:k] if theta[i] != 0]
        converged = []
        for i in wanted:
            lam = shift + 1.0 / theta[i]
            x = V[:, :m] @ Y[:, i]
            x = x / np.linalg.norm(x)
            res = _residual(M, lam, x)
            if res <= tol:
                converged.append(Eigenpair(complex(lam), x, res, shift, restart))
        if len(converged) >= k or restart == max_restarts:
            break

        # Krylov-Schur truncation keeping the largest |theta|
        p = min(m - 1, k + (m - k) // 2)
        mags = np.sort(np.abs(theta))[::-1]
        cut = 0.5 * (mags[p - 1] + mags[p]) if p < m else 0.0
        T, Z, sdim = la.schur(Hm, output="complex", sort=lambda z: abs(z) > cut)
        if not 0 < sdim < m:
            T, Z = la.schur(Hm, output="complex")
            sdim = p
        V[:, :sdim] = V[:, :m] @ Z[:, :sdim]
        V[:, sdim] = V[:, m]
        b = H[m, :m] @ Z[:, :sdim]
        H[:] = 0.0
        H[:sdim, :sdim] = T[:sdim, :sdim]
        H[sdim, :sdim] = b
        j0 = sdim

    if polish:
        converged = [_polish(M, pair, polish) for pair in converged]
    cv = _cell_volume(op)
    for pair in converged:
        pair.vector = pair.vector / np.sqrt(cv)
    converged.sort(key=lambda p: abs(p.value - shift))
    if len(converged) < k:
        raise ConvergenceError(f"only {len(converged)} of {k} eigenpairs converged near {shift}", converged)
    return converged[:k]


def _polish(M, pair, steps):
    lam = pair.value
    delta = 1e-9 * (1 + abs(lam)) * (1 + 1j)
    try:
        fac = ShiftedFactor(M, lam + delta, check=False)
    except FactorizationError:
        return pair
    x = pair.vector
    for _ in range(steps):
        y = fac.solve(x)
        if not np.all(np.isfinite(y)):
            return pair
        x = y / np.linalg.norm(y)
    # fix the phase so the largest component is real positive
    k = int(np.argmax(np.abs(x)))
    x = x * (abs(x[k]) / x[k])
    res = _residual(M, lam, x)
    if res <= max(pair.residual, 1e-300) * 10:
        return Eigenpair(lam, x, res, pair.shift, pair.iterations)
    return pair


def eigenpairs_near(op, shifts, k=6, tol=1e-8, retries=3, **kw):
    """Run :func:`shift_invert_arnoldi` per shift, perturbing a singular shift up to ``retries`` times.

    Duplicates found from neighbouring shifts are merged (closest to its own shift wins).
    """
    found = []
    for s in shifts:
        s = complex(s)
        for attempt in range(retries + 1):
            try:
                found.extend(shift_invert_arnoldi(op, s, k=k, tol=tol, **kw))
                break
            except FactorizationError:
                if attempt == retries:
                    raise
                s = s + 1e-3 * (1 + abs(s)) * (1 + 1j)
    merged = []
    for pair in sorted(found, key=lambda p: abs(p.value - p.shift)):
        scale = 1 + abs(pair.value)
        if all(abs(pair.value - q.value) > 1e-7 * scale for q in merged):
            merged.append(pair)
    merged.sort(key=lambda p: (round(p.value.real, 9), round(p.value.imag, 9)))
    return merged


def richardson_values(coarse, fine, order=2, ratio=2.0):
    """Extrapolate eigenvalues computed at spacings ``h`` and ``h / ratio``.

    Each coarse value is paired with its nearest fine value; returns
    ``fine + (fine - coarse) / (ratio^order - 1)`` per coarse value.
    """
    fine_vals = np.array([complex(getattr(f, "value", f)) for f in fine])
    out = []
    for c in coarse:
        c = complex(getattr(c, "value", c))
        f = fine_vals[int(np.argmin(np.abs(fine_vals - c)))]
        out.append(f + (f - c) / (ratio**order - 1))
    return out


def _orth(X, rtol=1e-12):
    if X.shape[1] == 0:
        return X
    U, s, _ = la.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    return U[:, s > rtol * s[0]]


class _Contour:
    def __init__(self, M, center, radius, n_quad):
        self.M = M
        self.center = complex(center)
        self.radius = float(radius)
        self.n_quad = n_quad
        self._factors = {}

    def node(self, k, n):
        return self.center + self.radius * np.exp(2j * np.pi * k / n)

    def _factor(self, z):
        key = (round(z.real, 15), round(z.imag, 15))
        if key not in self._factors:
            try:
                self._factors[key] = ShiftedFactor(self.M, z, pivot_tol=1e-13)
            except FactorizationError as err:
                raise IllSeparatedContour(f"quadrature point {z} is nearly singular") from err
        return self._factors[key]

    def apply(self, X, n=None, ks=None):
        """Trapezoidal ``(1/2 pi i) oint (z - M)^{-1} X dz`` with ``n`` nodes (subset ``ks`` if given)."""
        n = n or self.n_quad
        ks = range(n) if ks is None else ks
        out = np.zeros(X.shape, dtype=complex)
        for k in ks:
            z = self.node(k, n)
            Y = -self._factor(z).solve(X)
            if not np.all(np.isfinite(Y)) or np.linalg.norm(Y) > 1e13 * max(np.linalg.norm(X), 1e-300):
                raise IllSeparatedContour(f"quadrature point {z} is nearly singular")
            out += (z - self.center) * Y
        return out / n


def riesz_projector(op, center, radius, n_quad=32, probe_basis=None, n_random=6, seed=0) -> ProjectorResult:
    """Contour-quadrature Riesz projector around the circle ``|z - center| = radius``.

    The projector is compressed onto ``Z = orth([probe_basis, random, P @ those])``;
    the multiplicity is the rounded real trace of ``Z^H P Z``.
    """
    M = _as_matrix(op)
    N = M.shape[0]
    rng = np.random.default_rng(seed)
    cols = []
    if probe_basis is not None:
        pb = np.asarray(probe_basis, dtype=complex)
        cols.append(pb.reshape(N, -1))
    r = min(n_random, N)
    if r:
        cols.append(rng.standard_normal((N, r)) + 1j * rng.standard_normal((N, r)))
    X = _orth(np.hstack(cols))
    contour = _Contour(M, center, radius, n_quad)
    Y = contour.apply(X)
    Z = _orth(np.hstack([X, Y]))
    PZ = contour.apply(Z)
    C = Z.conj().T @ PZ
    trace = complex(np.trace(C))
    mult = int(round(trace.real))
    if abs(trace - mult) > 0.1:
        raise IllSeparatedContour(f"trace {trace:.4g} is far from an integer; contour is ill-separated")
    PPZ = contour.apply(PZ)
    defect = float(la.norm(PPZ - PZ, 2)) if PZ.size else 0.0
    # doubling: the 2*n_quad rule reuses the n_quad nodes and adds the odd ones
    odd = contour.apply(Z, n=2 * n_quad, ks=range(1, 2 * n_quad, 2))
    PZ2 = 0.5 * PZ + odd
    trace2 = complex(np.trace(Z.conj().T @ PZ2))
    U, s, _ = la.svd(PZ, full_matrices=False)
    basis = U[:, :mult]
    return ProjectorResult(complex(center), float(radius), n_quad, trace, mult, defect,
                           float(s[0]) if s.size else 0.0, float(abs(trace - trace2)), basis)


def resolvent_probe(op, mu, n_iters=30, seed=0) -> ResolventProbe:
    """Power iteration on ``R^H R`` with ``R = (op - mu)^{-1}``; the estimate is a lower bound of ``||R||``."""
    if n_iters < 10:
        raise ValueError("n_iters must be at least 10")
    M = _as_matrix(op)
    N = M.shape[0]
    fac = ShiftedFactor(M, mu)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iters):
        x = fac.solve(v)
        est = float(np.linalg.norm(x))
        y = fac.solve(x, trans="H")
        v = y / np.linalg.norm(y)
    x = fac.solve(v)
    est = max(est, float(np.linalg.norm(x)))
    resid = float(np.linalg.norm(M @ x - complex(mu) * x - v))
    return ResolventProbe(complex(mu), est, resid, n_iters)


def refine_tridiagonal_eigenvalue(op, lam0, dps=60, pivot=None, maxiter=200):
    """Polish an eigenvalue of a tridiagonal matrix in ``dps``-digit arithmetic.

    The matrix entries are taken exactly as stored.  The zero of the twisted
    pivot ``gamma_k(lambda) = dL_k + dR_k - (a_k - lambda)`` (forward and backward
    pivot recurrences meeting at ``k``) is found by the secant method, so both
    recurrences run in their stable, inward direction.  Returns an ``mpmath.mpc``.
    """
    import mpmath

    M = _as_matrix(op)
    if not sp.issparse(M):
        M = sp.csr_matrix(M)
    if _bandwidth(M) > 1:
        raise ValueError("operator is not tridiagonal")
    n = M.shape[0]
    a = M.diagonal()
    up = M.diagonal(1)
    lo = M.diagonal(-1)
    k = n // 2 if pivot is None else int(pivot)
    with mpmath.workdps(dps):
        A = [mpmath.mpc(complex(z)) for z in a]
        P = [mpmath.mpc(complex(u)) * mpmath.mpc(complex(l)) for u, l in zip(up, lo)]

        def gamma(lam):
            d = A[0] - lam
            for j in range(1, k + 1):
                d = (A[j] - lam) - P[j - 1] / d
            dl = d
            d = A[n - 1] - lam
            for j in range(n - 2, k - 1, -1):
                d = (A[j] - lam) - P[j] / d
            return dl + d - (A[k] - lam)

        x0 = mpmath.mpc(complex(lam0))
        x1 = x0 * (1 + mpmath.mpf("1e-9")) + mpmath.mpf("1e-12")
        f0, f1 = gamma(x0), gamma(x1)
        eps = mpmath.mpf(10) ** (-dps + 8)
        for _ in range(maxiter):
            if f1 == f0:
                break
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            x0, f0 = x1, f1
            x1, f1 = x2, gamma(x2)
            if abs(x1 - x0) <= eps * (1 + abs(x1)):
                break
        return +x1
