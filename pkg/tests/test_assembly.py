import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, strategies as st

from nonaccretive import (ElectromagneticField, Grid, apply_gradient, assemble_operator, edge_gradient,
                          random_compact_support)

import oracles


def test_free_laplacian_stencil_and_spectrum():
    g = Grid((0.0,), (np.pi,), (50,))
    op = assemble_operator(ElectromagneticField.from_strings(1, "0"), g)
    h = g.h[0]
    M = op.matrix.toarray()
    assert M[10, 10] == pytest.approx(2 / h**2, rel=1e-15)
    assert M[10, 9] == M[10, 11] == pytest.approx(-1 / h**2, rel=1e-15)
    assert np.count_nonzero(M[10]) == 3
    vals = np.sort(np.linalg.eigvalsh(M))[:5]
    assert np.allclose(vals, oracles.discrete_dirichlet_levels(np.pi, 50, 5), rtol=1e-12)


def test_constant_potential_shifts_the_diagonal():
    g = Grid.box(1.0, 20)
    a = assemble_operator(ElectromagneticField.from_strings(1, "x1^2"), g)
    b = assemble_operator(ElectromagneticField.from_strings(1, "x1^2 + 2.5 - i"), g)
    diff = (b.matrix - a.matrix).toarray()
    assert np.array_equal(np.diag(diff), np.full(g.size, 2.5 - 1j))
    assert np.count_nonzero(diff - np.diag(np.diag(diff))) == 0


def test_real_potential_gives_hermitian_matrix():
    g = Grid((-1.0, -1.0), (1.0, 1.0), (9, 11))
    assert assemble_operator(ElectromagneticField.from_strings(2, "x1^2 + sin(x2)"), g).is_hermitian()
    assert not assemble_operator(ElectromagneticField.from_strings(1, "i*x1"), Grid.box(1, 9)).is_hermitian()


def test_interior_row_reproduces_the_2d_stencil():
    g = Grid((-1.0, -1.0), (1.0, 1.0), (9, 11))
    op = assemble_operator(ElectromagneticField.from_strings(2, "0"), g)
    row = op.matrix.getrow(5 * 11 + 5).toarray().ravel()
    hx, hy = g.h
    assert row[5 * 11 + 5] == pytest.approx(2 / hx**2 + 2 / hy**2)
    assert row[4 * 11 + 5] == pytest.approx(-1 / hx**2) and row[5 * 11 + 4] == pytest.approx(-1 / hy**2)
    assert row.sum() == pytest.approx(0, abs=1e-9)


def test_gradient_of_sine_without_field():
    f = ElectromagneticField.from_strings(1, "0")
    errs = []
    for n in (100, 200, 400):
        g = Grid((0.0,), (np.pi,), (n,))
        x = g.axes[0]
        Du = apply_gradient(f, g, np.sin(x))[0]
        errs.append(np.max(np.abs(Du + 1j * np.cos(x))[1:-1]))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_gradient_stencil_width():
    f = ElectromagneticField.from_strings(2, "0", ["-x2/2", "x1/2"])
    g = Grid((-1.0, -1.0), (1.0, 1.0), (9, 9))
    u = np.zeros(g.size, dtype=complex)
    u[40] = 1
    for Du in apply_gradient(f, g, u):
        assert np.count_nonzero(Du) <= 3


@given(st.integers(0, 2**32 - 1))
def test_central_gradient_is_symmetric(seed):
    f = ElectromagneticField.from_strings(2, "0", ["x2^2 - x1", "sin(x1)"])
    g = Grid((-1.0, -2.0), (1.0, 2.0), (11, 13))
    u = random_compact_support(g, 0.1, seed)
    v = random_compact_support(g, 0.1, seed + 1)
    for Du, Dv in zip(apply_gradient(f, g, u), apply_gradient(f, g, v)):
        assert g.inner(Du, v) == pytest.approx(g.inner(u, Dv), rel=1e-12, abs=1e-12)


def _gaussian_case(field, a=3.0):
    """Analytic ``(-i grad + A)^2 u + V u`` for ``u = exp(-a |x|^2)``."""
    def exact(pts):
        u = np.exp(-a * np.sum(pts**2, axis=0))
        grad = -2 * a * pts * u
        lap = (4 * a**2 * np.sum(pts**2, axis=0) - 2 * a * pts.shape[0]) * u
        out = -lap + field.V_at(pts) * u
        if field.has_magnetic:
            A = field.A_at(pts)
            out = out - 2j * np.sum(A * grad, axis=0) - 1j * field.div_A_at(pts) * u + np.sum(A**2, axis=0) * u
        return u, out
    return exact


@pytest.mark.parametrize("dim,V,A,scheme", [
    (1, "x1^2 + i*x1^3", None, "expanded"),
    (1, "x1^2", ["x1^2 + 1"], "expanded"),
    (2, "x1^2 + i*x2", ["-x2/2", "x1/2 + x1^2"], "expanded"),
    (2, "x1^2 + i*x2", ["-x2/2", "x1/2 + x1^2"], "gauge_covariant"),
])
def test_consistency_order(dim, V, A, scheme):
    f = ElectromagneticField.from_strings(dim, V, A)
    exact = _gaussian_case(f)
    errs, hs = [], []
    for n in ((40, 80, 160) if dim == 2 else (100, 200, 400)):
        g = Grid((-3.0,) * dim, (3.0,) * dim, (n - 1,) * dim)
        u, ref = exact(g.points)
        op = assemble_operator(f, g, scheme)
        errs.append(np.max(np.abs(op.matrix @ u - ref)))
        hs.append(g.h[0])
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 1.9


@given(st.integers(0, 2**32 - 1))
def test_form_identity_for_the_edge_gradient(seed):
    f = ElectromagneticField.from_strings(2, "x1^2 + i*x2^3", ["-x2/2 + x1*x2", "x1/2 + cos(x2)"])
    g = Grid((-1.0, -1.5), (1.0, 1.5), (12, 15))
    op = assemble_operator(f, g, "gauge_covariant")
    D = edge_gradient(f, g)
    u = random_compact_support(g, 0.1, seed)
    v = random_compact_support(g, 0.1, seed + 7)
    lhs = g.inner(op.matrix @ u, v)
    rhs = D.inner(u, v) + g.inner(op.potential * u, v)
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + abs(rhs))


@given(st.integers(0, 2**32 - 1))
def test_form_identity_without_field_expanded(seed):
    f = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")
    g = Grid.box(2.0, 60)
    op = assemble_operator(f, g, "expanded")
    D = edge_gradient(f, g)
    u = random_compact_support(g, 0.1, seed)
    v = random_compact_support(g, 0.1, seed + 7)
    lhs = g.inner(op.matrix @ u, v)
    rhs = D.inner(u, v) + g.inner(op.potential * u, v)
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + abs(rhs))


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5))
def test_gauge_covariance(coef):
    a, b, c, d, e = coef
    phi = f"{a}*x1^2 + {b}*x1*x2 + {c}*x2^2 + {d}*x1 + {e}*x2"
    A = ["-x2/2 + x2^3", "x1/2"]
    # grad phi added to A, written out by hand
    A2 = [f"{A[0]} + 2*{a}*x1 + {b}*x2 + {d}", f"{A[1]} + {b}*x1 + 2*{c}*x2 + {e}"]
    A2 = [s.replace("+ -", "- ") for s in A2]
    g = Grid((-1.0, -1.0), (1.0, 1.0), (8, 9))
    L1 = assemble_operator(ElectromagneticField.from_strings(2, "x1^2", A), g, "gauge_covariant").matrix
    L2 = assemble_operator(ElectromagneticField.from_strings(2, "x1^2", A2), g, "gauge_covariant").matrix
    x1, x2 = g.points
    U = np.exp(1j * (a * x1**2 + b * x1 * x2 + c * x2**2 + d * x1 + e * x2))
    conj = (np.conj(U)[:, None] * L1.toarray()) * U[None, :]
    assert np.max(np.abs(L2.toarray() - conj)) <= 1e-12 * np.max(np.abs(L1.toarray()))


def test_landau_and_symmetric_gauges_agree():
    g = Grid.box(6.0, 41, dim=2)
    vals = []
    for A in (["0", "x1"], ["-x2/2", "x1/2"]):
        op = assemble_operator(ElectromagneticField.from_strings(2, "x1^2 + x2^2", A), g)
        assert op.scheme == "gauge_covariant"
        vals.append(np.sort(spla.eigsh(op.matrix, k=5, sigma=0, return_eigenvectors=False).real))
    assert np.max(np.abs(vals[0] - vals[1])) < 1e-8
