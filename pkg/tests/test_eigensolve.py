import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from nonaccretive import (ElectromagneticField, Grid, assemble_operator, certify, eigenpairs_near,
                          resolvent_probe, riesz_projector, shift_invert_arnoldi)
from nonaccretive.eigensolve import IllSeparatedContour, richardson_values

import oracles

PARADIGM = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")


def test_diagonal_nearest_eigenvalue():
    (pair,) = shift_invert_arnoldi(np.diag([1.0, 2.0, 3.0]), 0.9, k=1)
    assert abs(pair.value - 1) < 1e-12 and pair.residual < 1e-12


def test_jordan_block_eigenvalue():
    pairs = shift_invert_arnoldi(np.array([[2.0, 1.0], [0.0, 2.0]]), 0.0, k=1)
    # a defective eigenvalue is only determined to about sqrt(machine epsilon)
    assert abs(pairs[0].value - 2) < 1e-6 and pairs[0].residual < 1e-8


def test_dirichlet_laplacian_levels():
    g = Grid((0.0,), (np.pi,), (2000,))
    op = assemble_operator(ElectromagneticField.from_strings(1, "0"), g)
    vals = sorted(p.value.real for p in shift_invert_arnoldi(op, 0.5, k=3))
    ref = oracles.discrete_dirichlet_levels(np.pi, 2000, 3)
    assert np.allclose(vals, ref, rtol=1e-10)
    assert np.allclose(vals, [1, 4, 9], rtol=1e-5)


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_full_spectrum_matches_characteristic_polynomial(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    pairs = shift_invert_arnoldi(A, 0.05 + 0.03j, k=n)
    assert len(pairs) == n
    assert oracles.match_sets([p.value for p in pairs], oracles.charpoly_eigenvalues(A)) < 1e-8


def test_residuals_are_re_measured():
    g = Grid.box(10.0, 1000)
    op = assemble_operator(PARADIGM, g)
    for p in eigenpairs_near(op, [1.0, 5.0], k=3):
        psi = p.vector / np.linalg.norm(p.vector)
        res = np.linalg.norm(op.matrix @ psi - p.value * psi) / (1 + abs(p.value))
        assert res <= 1e-8
        assert res == pytest.approx(p.residual, rel=1e-3, abs=1e-12)  # both at the rounding floor


def test_shifts_are_merged_without_duplicates():
    g = Grid.box(8.0, 800)
    op = assemble_operator(ElectromagneticField.from_strings(1, "x1^2"), g)
    pairs = eigenpairs_near(op, [0.0, 0.01, 3.0], k=3)
    vals = np.array([p.value for p in pairs])
    assert len(vals) == len(set(np.round(vals.real, 6)))


def test_singular_shift_is_perturbed():
    pairs = eigenpairs_near(np.diag([1.0, 2.0, 3.0, 4.0]), [2.0], k=1)
    assert abs(pairs[0].value - 2) < 1e-12


def test_projector_simple_eigenvalue():
    res = riesz_projector(np.diag([1.0, 5.0]), 1.0, 1.0, n_quad=32)
    assert res.multiplicity == 1
    assert abs(res.trace - 1) < 1e-8 and res.idempotency_defect < 1e-8
    P = res.basis @ res.basis.conj().T
    assert np.allclose(np.abs(P), np.diag([1, 0]), atol=1e-8)


def test_projector_jordan_block():
    res = riesz_projector(oracles.jordan_model(2.0, 2, (5.0,)), 2.0, 0.5)
    assert res.multiplicity == 2
    assert abs(res.trace - 2) < 1e-8 and res.idempotency_defect < 1e-8


def test_projector_around_nothing():
    res = riesz_projector(np.diag([1.0, 5.0]), 3.0, 0.5)
    assert res.multiplicity == 0 and res.norm < 1e-8


@pytest.mark.parametrize("size", [2, 3, 4])
def test_projector_jordan_multiplicities(size):
    A = oracles.jordan_model(1.5 - 0.5j, size, (4.0, -3.0 + 1j))
    res = riesz_projector(A, 1.5 - 0.5j, 1.0)
    assert res.multiplicity == size
    assert abs(res.trace - size) < 1e-8 and res.idempotency_defect < 1e-8


def test_contour_through_an_eigenvalue_is_rejected():
    with pytest.raises(IllSeparatedContour):
        riesz_projector(np.diag([1.0, 2.0]), 1.0, 1.0, n_quad=4)


def test_paradigm_eigenvalues_are_simple():
    g = Grid.box(10.0, 2000)
    op = assemble_operator(PARADIGM, g)
    pairs = eigenpairs_near(op, [1.0], k=3)
    vals = sorted((p.value for p in pairs), key=lambda z: z.real)
    for i, lam in enumerate(vals):
        others = [abs(lam - w) for j, w in enumerate(vals) if j != i]
        res = riesz_projector(op, lam, 0.3 * min(others), probe_basis=pairs[i].vector)
        assert res.multiplicity == 1


def test_resolvent_norms():
    assert resolvent_probe(np.diag([1.0, 2.0]), 0.0).norm_estimate == pytest.approx(1.0, rel=1e-10)
    g = Grid((0.0,), (np.pi,), (400,))
    op = assemble_operator(ElectromagneticField.from_strings(1, "0"), g)
    lam1 = oracles.discrete_dirichlet_levels(np.pi, 400, 1)[0]
    est = resolvent_probe(op, -1.0, n_iters=40).norm_estimate
    assert est == pytest.approx(1 / (lam1 + 1), rel=1e-8)
    assert est == pytest.approx(0.5, rel=1e-4)


def test_paradigm_resolvent_bound():
    g = Grid.box(10.0, 2000)
    cert = certify(PARADIGM, g)
    op = assemble_operator(PARADIGM, g)
    est = resolvent_probe(op, -cert.gamma2 - 5).norm_estimate
    assert est <= 2 / 5 + 10 * g.h[0] ** 2


def test_sparse_matrix_input():
    M = sp.diags([np.arange(1.0, 11.0)], [0], format="csr")
    pairs = shift_invert_arnoldi(M, 4.2, k=2)
    assert sorted(round(p.value.real, 10) for p in pairs) == [4.0, 5.0]


def test_richardson_combination():
    out = richardson_values([1.0 + 4e-4, 3.0 + 1.2e-3], [3.0 + 3e-4, 1.0 + 1e-4])
    assert np.allclose(out, [1.0, 3.0], atol=1e-15)
    ref = oracles.richardson_eigenvalue(lambda x: x**2, 8.0, 800, 0.0, k=1)
    assert abs(ref[0] - 1) < 1e-8
