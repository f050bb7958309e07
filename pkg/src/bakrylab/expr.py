"""Small closed-form expression grammar used for warps, weights and scenario data.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | atom
    atom   := NUMBER | 'pi' | 't' | 'y' | FUNC '(' expr ')'
            | 'pow' '(' expr ',' expr ')' | '(' expr ')'
    FUNC   := 'exp' | 'sin' | 'cos' | 'tanh' | 'log'

Expressions are immutable trees that evaluate on numpy arrays and
differentiate symbolically, so warp and weight derivatives are exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr",
    "ExpressionError",
    "parse",
    "const",
    "var",
    "exp",
    "sin",
    "cos",
    "tanh",
    "log",
    "power",
    "as_expr",
    "T",
    "Y",
]

VARIABLES = ("t", "y")
UNARY_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "log": np.log,
}
_BINARY_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


class ExpressionError(ValueError):
    """Raised for malformed expression text; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at column {position + 1}")


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple["Expr", ...] = ()
    value: float | str | None = None

    # -- evaluation --------------------------------------------------------
    def __call__(self, t=0.0, y=0.0):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        out = self._eval({"t": t, "y": y})
        shape = np.broadcast(t, y).shape
        if shape == ():
            return float(out)
        return np.broadcast_to(out, shape).astype(float, copy=True)

    def _eval(self, env):
        op = self.op
        if op == "const":
            return self.value
        if op == "var":
            return env[self.value]
        if op == "neg":
            return -self.args[0]._eval(env)
        if op in UNARY_FUNCS:
            return UNARY_FUNCS[op](self.args[0]._eval(env))
        a = self.args[0]._eval(env)
        b = self.args[1]._eval(env)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        if op == "pow":
            return np.power(a, b)
        raise AssertionError(op)

    # -- structure ---------------------------------------------------------
    def depends_on(self, name: str) -> bool:
        if self.op == "var":
            return self.value == name
        return any(arg.depends_on(name) for arg in self.args)

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def diff(self, name: str) -> "Expr":
        """Symbolic partial derivative with respect to ``name``."""
        op, args = self.op, self.args
        if not self.depends_on(name):
            return ZERO
        if op == "var":
            return ONE
        if op == "neg":
            return -args[0].diff(name)
        if op == "+":
            return args[0].diff(name) + args[1].diff(name)
        if op == "-":
            return args[0].diff(name) - args[1].diff(name)
        if op == "*":
            a, b = args
            return a.diff(name) * b + a * b.diff(name)
        if op == "/":
            a, b = args
            return a.diff(name) / b - a * b.diff(name) / (b * b)
        u = args[0]
        du = u.diff(name)
        if op == "exp":
            return self * du
        if op == "sin":
            return cos(u) * du
        if op == "cos":
            return -sin(u) * du
        if op == "tanh":
            return (ONE - self * self) * du
        if op == "log":
            return du / u
        if op == "pow":
            base, expo = args
            if not expo.depends_on(name):
                return expo * power(base, expo - ONE) * base.diff(name)
            return self * (expo.diff(name) * log(base) + expo * base.diff(name) / base)
        raise AssertionError(op)

    # -- arithmetic sugar --------------------------------------------------
    def __add__(self, other):
        return _add(self, as_expr(other))

    def __radd__(self, other):
        return _add(as_expr(other), self)

    def __sub__(self, other):
        return _sub(self, as_expr(other))

    def __rsub__(self, other):
        return _sub(as_expr(other), self)

    def __mul__(self, other):
        return _mul(self, as_expr(other))

    def __rmul__(self, other):
        return _mul(as_expr(other), self)

    def __truediv__(self, other):
        return _div(self, as_expr(other))

    def __rtruediv__(self, other):
        return _div(as_expr(other), self)

    def __neg__(self):
        return _neg(self)

    # -- printing ----------------------------------------------------------
    def __str__(self) -> str:
        return _format(self)

    def __repr__(self) -> str:
        return f"Expr({_format(self)!r})"


def _prec(e: Expr) -> int:
    if e.op in _BINARY_PREC:
        return _BINARY_PREC[e.op]
    if e.op == "neg":
        return 3
    if e.op == "const" and e.value < 0:
        return 3
    return 4


def _format_const(v: float) -> str:
    if v == math.pi:
        return "pi"
    return repr(float(v))


def _format(e: Expr) -> str:
    op = e.op
    if op == "const":
        return _format_const(e.value)
    if op == "var":
        return e.value
    if op == "neg":
        inner = e.args[0]
        s = _format(inner)
        return f"-({s})" if _prec(inner) < 4 else f"-{s}"
    if op in UNARY_FUNCS:
        return f"{op}({_format(e.args[0])})"
    if op == "pow":
        return f"pow({_format(e.args[0])}, {_format(e.args[1])})"
    p = _BINARY_PREC[op]
    left, right = e.args
    ls = _format(left)
    rs = _format(right)
    if _prec(left) < p:
        ls = f"({ls})"
    # right operands at equal precedence are bracketed so the tree round-trips
    if _prec(right) <= p or _prec(right) == 3:
        rs = f"({rs})"
    return f"{ls} {op} {rs}"


# -- smart constructors (light constant folding) ---------------------------

def const(value: float) -> Expr:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite constant {value!r}")
    return Expr("const", (), value + 0.0)


def var(name: str) -> Expr:
    if name not in VARIABLES:
        raise ValueError(f"unknown variable {name!r}")
    return Expr("var", (), name)


ZERO = Expr("const", (), 0.0)
ONE = Expr("const", (), 1.0)
T = var("t")
Y = var("y")


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return parse(x)
    return const(x)


def _add(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.value + b.value)
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Expr("+", (a, b))


def _sub(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.value - b.value)
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return Expr("-", (a, b))


def _mul(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.value * b.value)
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Expr("*", (a, b))


def _div(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        raise ZeroDivisionError("division by constant zero")
    if a.is_const and b.is_const:
        return const(a.value / b.value)
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return Expr("/", (a, b))


def _neg(a: Expr) -> Expr:
    if a.is_const:
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def _func(name: str, u) -> Expr:
    u = as_expr(u)
    if u.is_const:
        return const(float(UNARY_FUNCS[name](u.value)))
    return Expr(name, (u,))


def exp(u) -> Expr:
    return _func("exp", u)


def sin(u) -> Expr:
    return _func("sin", u)


def cos(u) -> Expr:
    return _func("cos", u)


def tanh(u) -> Expr:
    return _func("tanh", u)


def log(u) -> Expr:
    return _func("log", u)


def power(base, expo) -> Expr:
    base, expo = as_expr(base), as_expr(expo)
    if expo == ONE:
        return base
    if expo == ZERO:
        return ONE
    if base.is_const and expo.is_const:
        return const(base.value ** expo.value)
    return Expr("pow", (base, expo))


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/(),−×÷]))"
)
_UNICODE_OPS = {"−": "-", "×": "*", "÷": "/"}


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        tok = m.group(kind)
        start = m.start(kind)
        if kind == "op":
            tok = _UNICODE_OPS.get(tok, tok)
        tokens.append((kind, tok, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, tok, pos = self.take()
        if tok != op or kind != "op":
            shown = tok or "end of input"
            raise ExpressionError(f"expected {op!r}, found {shown!r}", pos, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, tok, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {tok!r}", pos, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, _ = self.take()
            rhs = self.term()
            e = _add(e, rhs) if op == "+" else _sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = _mul(e, rhs)
            else:
                if rhs == ZERO:
                    raise ExpressionError("division by zero", pos, self.text)
                e = _div(e, rhs)
        return e

    def unary(self) -> Expr:
        kind, tok, _ = self.peek()
        if kind == "op" and tok == "-":
            self.take()
            return _neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, tok, pos = self.take()
        if kind == "num":
            return const(float(tok))
        if kind == "name":
            if tok in VARIABLES:
                return var(tok)
            if tok == "pi":
                return const(math.pi)
            if tok in UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _func(tok, arg)
            if tok == "pow":
                self.expect("(")
                base = self.expr()
                self.expect(",")
                expo = self.expr()
                self.expect(")")
                return power(base, expo)
            raise ExpressionError(f"unknown name {tok!r}", pos, self.text)
        if kind == "op" and tok == "(":
            e = self.expr()
            self.expect(")")
            return e
        shown = tok or "end of input"
        raise ExpressionError(f"unexpected {shown!r}", pos, self.text)


def parse(text: str) -> Expr:
    """Parse expression text; raises :class:`ExpressionError` with a position."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text).parse()
