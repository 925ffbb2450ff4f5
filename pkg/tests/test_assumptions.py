import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonaccretive import ElectromagneticField, Grid, NoCertificate, certify, diagnose_asymptotics
from nonaccretive.assumptions import DEFAULT_GAMMA1_LADDER, gamma2_of, recheck_refined

PARADIGM = ElectromagneticField.from_strings(1, "-x1^2 + i*x1^3")

# gamma2(gamma1) on [-10, 10] with 4001 interior nodes, from tests/oracles.assumption_lhs_1d
# (mpmath derivative of the multiplier at 30 digits)
GAMMA2_HALF = 10.16826232280833
GAMMA2_ONE = 109.84592699670043


def test_constant_potential_needs_no_shift():
    cert = certify(ElectromagneticField.from_strings(1, "1"), Grid.box(3, 50), candidates=[1.0])
    assert cert.gamma1 == 1 and cert.gamma2 == 0 and cert.valid


def test_paradigm_certificate_against_oracle():
    cert = certify(PARADIGM, Grid.box(10, 4001))
    assert cert.gamma1 == 0.5
    assert cert.gamma2 == pytest.approx(GAMMA2_HALF, rel=1e-10)
    table = dict(cert.table)
    assert table[1.0] == pytest.approx(GAMMA2_ONE, rel=1e-10)
    assert cert.valid and cert.margin_min >= 0
    assert abs(cert.margin_min) < 1e-9  # the worst point is active by construction


def test_default_ladder():
    assert list(DEFAULT_GAMMA1_LADDER) == [2**k / 16 for k in range(9)]


def test_real_linear_potential_fails_as_the_box_grows():
    f = ElectromagneticField.from_strings(1, "x1")
    needs = []
    for R in (10, 20, 40, 80):
        cert_table = None
        try:
            certify(f, Grid.box(R, 40 * R + 1), gamma2_cap=20)
        except NoCertificate as exc:
            cert_table = exc.table
        if cert_table is None:
            cert_table = certify(f, Grid.box(R, 40 * R + 1), gamma2_cap=np.inf).table
        needs.append(min(g for _, g in cert_table))
    assert all(b > a for a, b in zip(needs, needs[1:]))
    with pytest.raises(NoCertificate) as err:
        certify(f, Grid.box(80, 3201), gamma2_cap=20)
    assert "no certificate under cap" in str(err.value)


def test_sample_points_instead_of_grid():
    pts = np.linspace(-2, 2, 9)[None]
    cert = certify(PARADIGM, pts, gamma2_cap=np.inf)
    L = PARADIGM.assumption_lhs(pts)
    assert np.all(L >= cert.gamma1 * np.abs(PARADIGM.V_at(pts)) - cert.gamma2 - 1e-12)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=40), st.floats(0.01, 4), st.floats(0.01, 4))
def test_gamma2_is_monotone_in_gamma1(xs, a, b):
    pts = np.array(xs)[None]
    L = PARADIGM.assumption_lhs(pts)
    aV = np.abs(PARADIGM.V_at(pts))
    lo, hi = sorted((a, b))
    assert gamma2_of(lo, L, aV) <= gamma2_of(hi, L, aV)
    g = gamma2_of(hi, L, aV)
    assert np.all(L - hi * aV + g >= -1e-9 * (1 + np.abs(L)))


@given(st.integers(20, 400))
def test_refinement_never_lowers_gamma2(n):
    grid = Grid.box(10, 2 * n + 1)
    cert = certify(PARADIGM, grid, gamma2_cap=np.inf)
    rc = recheck_refined(PARADIGM, grid, cert)
    assert rc["gamma2_needed"] >= cert.gamma2
    assert rc["margin_drop"] >= 0


@pytest.mark.parametrize("V,radii,ok", [
    ("i*x1^3", [2, 5, 10, 20, 40], True),
    ("-exp(x1^2) + i*exp(x1^4)", [1, 2, 3, 4, 5], True),
    ("-x1^2 + i*x1^3", [2, 5, 10, 20, 40], True),
    ("x1", [2, 5, 10, 20, 40], False),
])
def test_asymptotic_verdicts(V, radii, ok):
    rep = diagnose_asymptotics(ElectromagneticField.from_strings(1, V), radii)
    assert rep.passed is ok


def test_linear_potential_fails_on_negative_part():
    rep = diagnose_asymptotics(ElectromagneticField.from_strings(1, "x1"), [10, 20, 40, 80])
    assert not rep.verdict_negative
    assert rep.ratio_negative[-1] == pytest.approx(1, abs=1e-3)


def test_two_dimensional_asymptotics():
    f = ElectromagneticField.from_strings(2, "x1^2 + x2^2 + i*(x1^3 + x2^3)")
    rep = diagnose_asymptotics(f, [2, 4, 8, 16, 32, 64])
    assert rep.passed
