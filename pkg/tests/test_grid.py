import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonaccretive import Grid, random_compact_support


def test_single_node_indicator():
    g = Grid((0.0,), (1.0,), (9,))
    assert g.h[0] == pytest.approx(0.1, rel=1e-15)
    u = np.zeros(9)
    u[4] = 1
    assert g.inner(u, u) == pytest.approx(0.1, rel=1e-15)


def test_discrete_sine_orthogonality():
    g = Grid((0.0,), (np.pi,), (200,))
    x = g.axes[0]
    s1, s2 = np.sin(x), np.sin(2 * x)
    assert abs(g.inner(s1, s2)) < 1e-14
    assert g.inner(s1, s1).real == pytest.approx(np.pi / 2, rel=1e-14)


def test_quadrature_of_one():
    g = Grid((0.0, -1.0), (1.0, 2.0), (9, 29))
    one = np.ones(g.size)
    assert g.inner(one, one).real == pytest.approx(g.cell_volume * g.size, rel=1e-15)
    assert g.cell_volume * g.size == pytest.approx((1 - 0.1) * (3 - 0.1), rel=1e-14)


@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=1e-100, max_magnitude=1e100, allow_nan=False, allow_infinity=False))
def test_hermitian_symmetry_and_norm_scaling(seed, alpha):
    g = Grid((-2.0, -1.0), (2.0, 1.0), (7, 5))
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
    v = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
    assert g.inner(u, v) == pytest.approx(np.conj(g.inner(v, u)), rel=1e-14, abs=1e-14)
    assert g.norm(alpha * u) == pytest.approx(abs(alpha) * g.norm(u), rel=1e-14, abs=1e-300)


def test_compact_support_counts():
    g = Grid((0.0,), (1.0,), (99,))
    u = random_compact_support(g, 0.25, seed=3)
    x = g.axes[0][u != 0]
    assert x.min() >= 0.25 - 1e-12 and x.max() <= 0.75 + 1e-12
    assert 49 <= np.count_nonzero(u) <= 51
    assert np.array_equal(u, random_compact_support(g, 0.25, seed=3))
    assert not np.array_equal(u, random_compact_support(g, 0.25, seed=4))


def test_tight_margin_keeps_the_centre_node():
    # 9 nodes on (0, 1): only x = 0.5 sits 0.49 or more from the boundary
    g = Grid((0.0,), (1.0,), (9,))
    u = random_compact_support(g, 0.49, seed=0)
    assert np.count_nonzero(u) == 1 and u[4] != 0
    with pytest.raises(ValueError):
        random_compact_support(Grid((0.0,), (1.0,), (10,)), 0.49, seed=0)


def test_invalid_grids():
    with pytest.raises(ValueError):
        Grid((0.0,), (1.0,), (2,))
    with pytest.raises(ValueError):
        Grid((1.0,), (0.0,), (5,))
    with pytest.raises(ValueError):
        Grid((0.0,) * 3, (1.0,) * 3, (5,) * 3)


def test_nested_spacing_grids_share_coordinates():
    a, b = Grid.with_spacing(8, 0.01), Grid.with_spacing(10, 0.01)
    xa, xb = a.axes[0], b.axes[0]
    offset = int(np.argmin(np.abs(xb - xa[0])))
    assert np.array_equal(xa, xb[offset:offset + xa.size])
    fine = a.refine()
    assert np.array_equal(fine.axes[0][1::2], xa)
