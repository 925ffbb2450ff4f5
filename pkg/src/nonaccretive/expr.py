"""
Complex-valued scalar expressions over the variables ``x1 .. xd``.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' power)?            # right-associative
    atom    := NUMBER | 'i' | 'x'k | FUNC '(' sum ')' | '(' sum ')'

``FUNC`` is one of ``exp``, ``sin``, ``cos``, ``sqrt``.  Exponents must reduce to a
non-negative integer constant.  ``-x1^2`` therefore parses as ``-(x1^2)``.

Expressions evaluate on scalars or on arrays of points of shape ``(d, ...)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Pow",
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "differentiate",
    "to_string",
]

FUNCTIONS = ("exp", "sin", "cos", "sqrt")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    """Parse failure; ``position`` is a 1-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprEvalError(ExprError):
    """Division by zero or a non-finite intermediate during evaluation."""

    def __init__(self, message: str, subexpression: "Expr"):
        super().__init__(f"{message} in '{to_string(subexpression)}'")
        self.subexpression = subexpression


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or one of FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # '+', '-', '*', '/'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Const, Var, Unary, Binary, Pow]

ZERO = Const(0j)
ONE = Const(1 + 0j)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[pos + stripped]!r}", pos + stripped + 1)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text, dim):
        self.tokens = _tokenize(text)
        self.k = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos)
        return node

    def sum(self):
        node = self.product()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Binary(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.power()
            return Pow(base, _integer_exponent(exponent, exp_pos))
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(complex(float(text)))
        if kind == "name":
            if text == "i":
                return Const(1j)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Unary(text, arg)
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if m:
                index = int(m.group(1))
                if index > self.dim:
                    raise ExprSyntaxError(f"variable {text} exceeds dimension {self.dim}", pos)
                return Var(index)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.sum()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def _integer_exponent(node, pos):
    if isinstance(node, Pow) and isinstance(node.base, Const):
        node = Const(node.base.value ** node.exponent)
    if not isinstance(node, Const):
        raise ExprSyntaxError("non-integer exponent (exponent must be a constant)", pos)
    value = node.value
    if value.imag != 0 or value.real != int(value.real) or value.real < 0:
        raise ExprSyntaxError("non-integer exponent (expected a non-negative integer)", pos)
    return int(value.real)


def parse(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression tree over ``x1 .. x{dim}``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_UFUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt}


def evaluate(e: Expr, x) -> complex | np.ndarray:
    """Evaluate ``e`` at ``x``.

    ``x`` is a sequence of coordinates, or an array of shape ``(d, ...)`` for
    vectorised evaluation.  Division by zero and overflow raise
    :class:`ExprEvalError` naming the offending subexpression.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    with np.errstate(all="ignore"):
        value = _eval(e, x)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def _check(value, node):
    if not np.all(np.isfinite(value)):
        raise ExprEvalError("non-finite value", node)
    return value


def _eval(e, x):
    if isinstance(e, Const):
        if x.ndim > 1:
            return np.full(x.shape[1:], e.value, dtype=complex)
        return e.value
    if isinstance(e, Var):
        if e.index > x.shape[0]:
            raise ExprError(f"point has dimension {x.shape[0]}, expression uses x{e.index}")
        return x[e.index - 1].astype(complex) if x.ndim > 1 else complex(x[e.index - 1])
    if isinstance(e, Unary):
        a = _eval(e.arg, x)
        if e.op == "neg":
            return -a
        return _check(_UFUNCS[e.op](np.asarray(a, dtype=complex))[()], e)
    if isinstance(e, Pow):
        base = _eval(e.base, x)
        if e.exponent == 0:
            return np.ones_like(base) if np.ndim(base) else 1 + 0j
        return _check(_ipow(base, e.exponent), e)
    if isinstance(e, Binary):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        else:
            if np.any(np.asarray(b) == 0):
                raise ExprEvalError("division by zero", e)
            r = a / b
        return _check(r, e)
    raise TypeError(f"not an expression node: {e!r}")


def _ipow(base, n):
    # repeated squaring with plain multiplications keeps results bit-reproducible
    result = None
    power = base
    while n:
        if n & 1:
            result = power if result is None else result * power
        n >>= 1
        if n:
            power = power * power
    return result


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def _is(e, v):
    return isinstance(e, Const) and e.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Binary("+", a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return Binary("-", a, b)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Binary("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Binary("/", a, b)


def _neg(a):
    if _is(a, 0):
        return ZERO
    return Unary("neg", a)


def _pow(a, n):
    if n == 0:
        return ONE
    if n == 1:
        return a
    return Pow(a, n)


def differentiate(e: Expr, var: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``x{var}``."""
    if var < 1:
        raise ValueError("variable index is 1-based")
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == var else ZERO
    if isinstance(e, Binary):
        da = differentiate(e.left, var)
        db = differentiate(e.right, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        # (a/b)' = (a'b - ab')/b^2
        return _div(_sub(_mul(da, e.right), _mul(e.left, db)), _pow(e.right, 2))
    if isinstance(e, Pow):
        du = differentiate(e.base, var)
        if e.exponent == 0:
            return ZERO
        return _mul(_mul(Const(complex(e.exponent)), _pow(e.base, e.exponent - 1)), du)
    if isinstance(e, Unary):
        du = differentiate(e.arg, var)
        if e.op == "neg":
            return _neg(du)
        if e.op == "exp":
            return _mul(du, e)
        if e.op == "sin":
            return _mul(du, Unary("cos", e.arg))
        if e.op == "cos":
            return _neg(_mul(du, Unary("sin", e.arg)))
        if e.op == "sqrt":
            # singular where the radicand vanishes; evaluation reports it
            return _div(du, _mul(Const(2 + 0j), e))
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _const_str(c: complex) -> str:
    def real(r):
        if r == int(r) and abs(r) < 1e15:
            return str(int(r))
        return repr(r)

    if c.imag == 0:
        return real(c.real) if c.real >= 0 else f"-{real(-c.real)}"
    if c == 1j:
        return "i"
    if c.real == 0:
        return f"{real(c.imag)}*i" if c.imag > 0 else f"-{real(-c.imag)}*i"
    sign = "+" if c.imag >= 0 else "-"
    return f"{real(c.real)}{sign}{real(abs(c.imag))}*i"


def _str(e) -> tuple[str, int]:
    """Return (text, precedence) with precedence 1 (+-) .. 5 (atom)."""
    if isinstance(e, Const):
        s = _const_str(e.value)
        plain = e.value == 1j or (e.value.imag == 0 and e.value.real >= 0)
        return (s if plain else f"({s})"), 5
    if isinstance(e, Var):
        return f"x{e.index}", 5
    if isinstance(e, Unary):
        a, pa = _str(e.arg)
        if e.op == "neg":
            return ("-" + (a if pa > 3 else f"({a})")), 3
        return f"{e.op}({a})", 5
    if isinstance(e, Pow):
        b, pb = _str(e.base)
        return (b if pb > 4 else f"({b})") + f"^{e.exponent}", 4
    if isinstance(e, Binary):
        p = _PREC[e.op]
        a, pa = _str(e.left)
        b, pb = _str(e.right)
        left = a if pa >= p else f"({a})"
        right = b if pb > p else f"({b})"
        return f"{left}{e.op}{right}", p
    raise TypeError(f"not an expression node: {e!r}")


def to_string(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_string(e))`` rebuilds the same tree."""
    return _str(e)[0]
