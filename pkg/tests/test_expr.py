import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from nonaccretive.expr import (Binary, Const, ExprEvalError, ExprSyntaxError, Pow, Unary, Var, differentiate,
                               evaluate, parse, to_string)


@pytest.mark.parametrize("text,x,expected", [
    ("x1^2", [2.0], 4),
    ("-x1^2 + i*x1^3", [1.0], -1 + 1j),
    ("exp(x1^4)", [1.0], math.e),
    ("i*x1^3", [2.0], 8j),
    ("exp(x1^2)", [0.0], 1),
    ("1/(1+x1^2)", [1.0], 0.5),
    ("2^3^2", [0.0], 512),
    ("-2^2", [0.0], -4),
    ("x1*x2 - x2/2", [3.0, 4.0], 10),
    ("1.5e1 + .5", [0.0], 15.5),
])
def test_examples(text, x, expected):
    assert evaluate(parse(text, len(x)), x) == pytest.approx(expected, rel=1e-15, abs=1e-15)


@pytest.mark.parametrize("text,expected", [
    ("x1^3", "3*x1^2"),
    ("exp(x1^2)", "2*x1*exp(x1^2)"),
    ("7 + 2*i", "0"),
])
def test_derivative_examples(text, expected):
    d = differentiate(parse(text, 1), 1)
    for x in (-1.3, 0.0, 0.7, 2.0):
        assert evaluate(d, [x]) == pytest.approx(evaluate(parse(expected, 1), [x]), rel=1e-14, abs=1e-14)


def test_derivative_of_constant_folds_to_zero():
    assert differentiate(parse("3 - i", 1), 1) == Const(0j)
    assert differentiate(parse("x2", 2), 1) == Const(0j)
    assert differentiate(parse("x2", 2), 2) == Const(1 + 0j)


@pytest.mark.parametrize("text,pos", [
    ("x1 + * 2", 6),
    ("x1 $ 2", 4),
    ("(x1 + 2", 8),
    ("x1 + 2)", 7),
])
def test_syntax_error_positions(text, pos):
    with pytest.raises(ExprSyntaxError) as err:
        parse(text, 1)
    assert err.value.position == pos
    assert f"position {pos}" in str(err.value)


@pytest.mark.parametrize("text,fragment", [
    ("y + 1", "unknown"),
    ("x3", "x3"),
    ("x1^2.5", "exponent"),
    ("x1^x1", "exponent"),
    ("log(x1)", "log"),
])
def test_semantic_errors(text, fragment):
    with pytest.raises(ExprSyntaxError) as err:
        parse(text, 2)
    assert fragment in str(err.value)


def test_division_by_zero_is_reported():
    with pytest.raises(ExprEvalError) as err:
        evaluate(parse("1/(x1-1)", 1), [1.0])
    assert "x1-1" in str(err.value)


def test_overflow_is_reported():
    with pytest.raises(ExprEvalError):
        evaluate(parse("exp(x1^4)", 1), [30.0])


def test_vectorised_matches_pointwise():
    e = parse("-x1^2 + i*x2^3*sin(x1)", 2)
    pts = np.array([[0.1, -0.5, 2.0], [1.0, 0.3, -1.2]])
    vec = evaluate(e, pts)
    for j in range(3):
        assert vec[j] == evaluate(e, pts[:, j])


def test_evaluation_is_bitwise_deterministic():
    e = parse("exp(sin(x1)*x2) / (2 + cos(x2)^3)", 2)
    assert evaluate(e, [0.3, 0.4]) == evaluate(parse(to_string(e), 2), [0.3, 0.4])


# -- random expressions -------------------------------------------------------

def _leaves(dim):
    consts = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False).map(
        lambda c: Const(complex(round(c.real, 3), round(c.imag, 3))))
    return st.one_of(consts, st.integers(1, dim).map(Var))


def _trees(dim, smooth=True):
    funcs = ["exp", "sin", "cos", "neg"]

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(funcs), children).map(lambda t: Unary(*t)),
            st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: Binary(*t)),
            st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
            st.tuples(children, children).map(lambda t: Binary("/", t[0], Binary("+", Const(2 + 0j), Pow(t[1], 2)))),
        )
    return st.recursive(_leaves(dim), extend, max_leaves=8)


@given(_trees(2), st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2), st.integers(1, 2))
def test_derivative_matches_central_differences(e, x, k):
    try:
        f0 = evaluate(e, x)
        d = evaluate(differentiate(e, k), x)
    except ExprEvalError:
        assume(False)
    step = 1e-5
    xp, xm = list(x), list(x)
    xp[k - 1] += step
    xm[k - 1] -= step
    try:
        fd = (evaluate(e, xp) - evaluate(e, xm)) / (2 * step)
    except ExprEvalError:
        assume(False)
    assume(abs(f0) < 1e6 and abs(d) < 1e6)
    # central differences carry O(step^2 f''') truncation and O(eps |f| / step) rounding
    assert abs(d - fd) <= 1e-6 * max(abs(d), 1.0) + 1e-9 * max(abs(f0), 1.0) / step


@given(_trees(2))
def test_print_parse_round_trip(e):
    once = parse(to_string(e), 2)
    assert parse(to_string(once), 2) == once
    x = [0.37, -0.81]
    try:
        a = evaluate(e, x)
    except ExprEvalError:
        return
    assert evaluate(once, x) == pytest.approx(a, rel=1e-12, abs=1e-12)
