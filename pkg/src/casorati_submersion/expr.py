"""Arithmetic expressions for metric entries, map components and structure tensors.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Whitespace is ignored.  There is no implicit multiplication, so ``2x`` is a
syntax error.  Unknown function names are rejected while parsing; unknown
identifiers are only detected when the expression is bound to a coordinate
list (see :func:`compile_expr`).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from . import numkit

__all__ = [
    "Expr",
    "Lit",
    "Ident",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "ExprSyntaxError",
    "UnboundIdentifierError",
    "FUNCTIONS",
    "parse",
    "to_text",
    "identifiers",
    "diff",
    "compile_expr",
    "eval_jet",
    "eval_float",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class ExprSyntaxError(ValueError):
    """Parse failure; ``offset`` is the byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnboundIdentifierError(KeyError):
    pass


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Lit, Ident, Neg, Add, Sub, Mul, Div, Pow, Call]


# --------------------------------------------------------------------------
# tokenizer and parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte_pos)
        text = m.group(0)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", tok.offset)

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "num":
            return Lit(float(tok.text))
        if tok.kind == "ident":
            if self.peek().text == "(":
                if tok.text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {tok.text!r}", tok.offset)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            return Ident(tok.text)
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.offset)


def parse(source: str) -> Expr:
    """Parse expression text into an immutable tree."""
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Lit) and e.value < 0:
        return 3
    return _PREC.get(type(e), 5)


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render an expression with the minimum parentheses needed to reparse it."""
    if isinstance(e, Lit):
        if e.value < 0:
            return "-" + _fmt_number(-e.value)
        return _fmt_number(e.value)
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        # a negative literal or nested negation prints fine after '-'; only sums need parens
        return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
    if isinstance(e, Pow):
        base = to_text(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        expo = to_text(e.exponent)
        if _prec(e.exponent) < 3:
            expo = f"({expo})"
        return f"{base}^{expo}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    p = _PREC[type(e)]
    left = to_text(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_text(e.right)
    # left-associative operators need parens on an equal-precedence right operand
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {op} {right}"


def identifiers(e: Expr) -> set[str]:
    """Names of all identifiers referenced by ``e``."""
    if isinstance(e, Ident):
        return {e.name}
    if isinstance(e, Lit):
        return set()
    if isinstance(e, (Neg, Call)):
        return identifiers(e.arg)
    if isinstance(e, Pow):
        return identifiers(e.base) | identifiers(e.exponent)
    return identifiers(e.left) | identifiers(e.right)


# --------------------------------------------------------------------------
# symbolic differentiation (used to obtain dF as an expression)
# --------------------------------------------------------------------------

_ZERO, _ONE = Lit(0.0), Lit(1.0)


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Lit) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Lit):
        return Lit(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return _ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Lit) and isinstance(b, Lit):
        return Lit(a.value * b.value)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return _ZERO
    if _is(b, 1.0):
        return a
    return Div(a, b)


def diff(e: Expr, var: str) -> Expr:
    """Partial derivative of ``e`` with respect to identifier ``var``.

    Only trivial 0/1 folding is applied; the result is meant for evaluation,
    not for display.
    """
    if isinstance(e, Lit):
        return _ZERO
    if isinstance(e, Ident):
        return _ONE if e.name == var else _ZERO
    if isinstance(e, Neg):
        return _neg(diff(e.arg, var))
    if isinstance(e, Add):
        return _add(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Sub):
        return _sub(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Mul):
        return _add(_mul(diff(e.left, var), e.right), _mul(e.left, diff(e.right, var)))
    if isinstance(e, Div):
        du, dv = diff(e.left, var), diff(e.right, var)
        num = _sub(_mul(du, e.right), _mul(e.left, dv))
        if _is(num, 0.0):
            return _ZERO
        return _div(num, Pow(e.right, Lit(2.0)))
    if isinstance(e, Pow):
        db = diff(e.base, var)
        if var not in identifiers(e.exponent):
            if _is(db, 0.0):
                return _ZERO
            if isinstance(e.exponent, Lit):
                p = e.exponent.value
                lowered = e.base if p == 2.0 else Pow(e.base, Lit(p - 1.0))
                return _mul(_mul(Lit(p), lowered), db)
            return _mul(_mul(e.exponent, Pow(e.base, _sub(e.exponent, _ONE))), db)
        # general case: d(b^p) = b^p (p' ln b + p b'/b)
        dp = diff(e.exponent, var)
        inner = _add(_mul(dp, Call("ln", e.base)), _div(_mul(e.exponent, db), e.base))
        return _mul(e, inner)
    if isinstance(e, Call):
        da = diff(e.arg, var)
        if _is(da, 0.0):
            return _ZERO
        a = e.arg
        outer = {
            "sin": lambda: Call("cos", a),
            "cos": lambda: _neg(Call("sin", a)),
            "exp": lambda: e,
            "ln": lambda: _div(_ONE, a),
            "sqrt": lambda: _div(Lit(0.5), e),
        }[e.func]()
        return _mul(outer, da)
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

_FUNC_IMPL: dict[str, Callable] = {
    "sin": numkit.sin,
    "cos": numkit.cos,
    "exp": numkit.exp,
    "ln": numkit.log,
    "sqrt": numkit.sqrt,
}


def compile_expr(e: Expr, coords: Sequence[str]) -> Callable[[Sequence], object]:
    """Bind ``e`` to a coordinate list and return ``f(values) -> value``.

    ``values`` may hold floats or :class:`numkit.Jet2` scalars.  Unknown
    identifiers raise :class:`UnboundIdentifierError` here, at bind time.
    """
    index = {name: i for i, name in enumerate(coords)}
    missing = identifiers(e) - index.keys()
    if missing:
        raise UnboundIdentifierError(f"unknown identifier(s): {', '.join(sorted(missing))}")

    def build(node: Expr) -> Callable:
        if isinstance(node, Lit):
            v = node.value
            return lambda xs: v
        if isinstance(node, Ident):
            k = index[node.name]
            return lambda xs: xs[k]
        if isinstance(node, Neg):
            f = build(node.arg)
            return lambda xs: -f(xs)
        if isinstance(node, Call):
            f = build(node.arg)
            impl = _FUNC_IMPL[node.func]
            return lambda xs: impl(f(xs))
        if isinstance(node, Pow):
            fb = build(node.base)
            if isinstance(node.exponent, Lit):
                p = node.exponent.value
                return lambda xs: _pow(fb(xs), p)
            fe = build(node.exponent)
            return lambda xs: _pow(fb(xs), fe(xs))
        fl, fr = build(node.left), build(node.right)
        if isinstance(node, Add):
            return lambda xs: fl(xs) + fr(xs)
        if isinstance(node, Sub):
            return lambda xs: fl(xs) - fr(xs)
        if isinstance(node, Mul):
            return lambda xs: fl(xs) * fr(xs)
        return lambda xs: _div_values(fl(xs), fr(xs))

    return build(e)


def _div_values(a, b):
    if not isinstance(b, numkit.Jet2) and b == 0.0:
        raise numkit.DomainError("division by zero")
    if isinstance(a, numkit.Jet2) or isinstance(b, numkit.Jet2):
        return a / b
    return a / b


def _pow(b, p):
    if not isinstance(b, numkit.Jet2) and not isinstance(p, numkit.Jet2):
        if float(p).is_integer():
            if b == 0.0 and p < 0:
                raise numkit.DomainError("0 raised to a negative power")
            return float(b) ** int(p)
        if b <= 0.0:
            raise numkit.DomainError("non-integer power of a non-positive base")
        return math.exp(p * math.log(b))
    return numkit.power(b, p)


def eval_jet(e: Expr, point: Sequence[numkit.Jet2] | Mapping[str, numkit.Jet2], coords: Sequence[str] | None = None):
    """Evaluate ``e`` on jets.

    ``point`` is either a mapping from identifier to jet, or a sequence of
    jets matching ``coords``.
    """
    if isinstance(point, Mapping):
        coords = list(point.keys())
        values = list(point.values())
    else:
        if coords is None:
            raise ValueError("coords are required when point is a sequence")
        values = list(point)
    return compile_expr(e, coords)(values)


def eval_float(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate ``e`` with plain floats."""
    return float(compile_expr(e, list(env.keys()))(list(env.values())))
