"""A small expression language over one variable r.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?            # right-associative
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are the variable ``r``, the constant ``pi``, the parameters
``N R b lambda alpha`` and the functions
``sinh cosh tanh coth exp ln abs sqrt sin cos sign besselj(order, x)``.
There is no implicit multiplication.  Exponents must not depend on ``r``.
``sign`` is produced by differentiating ``abs`` and is undefined at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from . import specfun

PARAMETERS = ("N", "R", "b", "lambda", "alpha")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = {
    "sinh": 1, "cosh": 1, "tanh": 1, "coth": 1, "exp": 1, "ln": 1, "abs": 1,
    "sqrt": 1, "sin": 1, "cos": 1, "sign": 1, "besselj": 2,
}


class ExprError(ValueError):
    """Base class for expression-language errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


class UnboundParameterError(ExprError):
    pass


class UnsupportedNodeError(ExprError):
    pass


# -- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Name:
    """A named constant or parameter."""
    name: str
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    pos: int = field(default=-1, compare=False)


Expr = Union[Num, Var, Name, Neg, Bin, Call]


def depends_on_r(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num, Name)):
        return False
    if isinstance(e, Neg):
        return depends_on_r(e.arg)
    if isinstance(e, Bin):
        return depends_on_r(e.left) or depends_on_r(e.right)
    return any(depends_on_r(a) for a in e.args)


# -- tokenizer -------------------------------------------------------------

@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i = 0
    n = len(src)

    def off(k: int) -> int:
        return len(src[:k].encode("utf-8"))

    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number '{text}'", off(i)) from None
            toks.append(_Tok("num", text, off(i)))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Tok("name", src[i:j], off(i)))
            i = j
            continue
        if ch in "+-*/^(),":
            toks.append(_Tok("op", ch, off(i)))
            i += 1
            continue
        raise ParseError(f"unexpected character '{ch}'", off(i))
    toks.append(_Tok("end", "", off(n)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.tok
        if t.kind != "op" or t.text != text:
            got = "end of input" if t.kind == "end" else f"'{t.text}'"
            raise ParseError(f"expected '{text}', got {got}", t.pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"expected an operator or end of input, got '{self.tok.text}'", self.tok.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            t = self.advance()
            e = Bin(t.text, e, self.term(), t.pos)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            t = self.advance()
            e = Bin(t.text, e, self.unary(), t.pos)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            t = self.advance()
            return Neg(self.unary(), t.pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self.advance()
            start = self.tok.pos
            expo = self.unary()
            if depends_on_r(expo):
                raise ParseError("exponent must not depend on r", start)
            return Bin("^", base, expo, t.pos)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), t.pos)
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise ParseError(f"expected '(' after function '{t.text}'", self.tok.pos)
                self.advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ParseError(
                        f"function '{t.text}' takes {FUNCTIONS[t.text]} argument(s), got {len(args)}", t.pos
                    )
                if t.text == "besselj" and depends_on_r(args[0]):
                    raise ParseError("besselj order must not depend on r", t.pos)
                return Call(t.text, tuple(args), t.pos)
            if t.text == "r":
                return Var(t.pos)
            if t.text in PARAMETERS or t.text in CONSTANTS:
                return Name(t.text, t.pos)
            raise UnknownIdentifierError(f"unknown identifier '{t.text}'", t.pos)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        got = "end of input" if t.kind == "end" else f"'{t.text}'"
        raise ParseError(f"expected a number, name or '(', got {got}", t.pos)


def parse(src: str) -> Expr:
    """Parse source text into an expression tree."""
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    return _Parser(src).parse()


# -- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_source(e: Expr) -> str:
    """Render an expression so that parse(to_source(e)) == e."""

    def wrap(x: Expr, min_prec: int) -> str:
        s = to_source(x)
        return f"({s})" if _prec(x) < min_prec else s

    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return "r"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Neg):
        return "-" + wrap(e.arg, 3)
    if isinstance(e, Call):
        return f"{e.func}(" + ", ".join(to_source(a) for a in e.args) + ")"
    p = _PREC[e.op]
    if e.op == "^":
        return f"{wrap(e.left, 5)}^{wrap(e.right, 3)}"
    return f"{wrap(e.left, p)} {e.op} {wrap(e.right, p + 1)}"


# -- evaluation ------------------------------------------------------------

def _checked(val, node: Expr, what: str = "non-finite result"):
    arr = np.asarray(val)
    if not np.all(np.isfinite(arr)):
        raise DomainError(what, to_source(node))
    return val


_UNARY: dict[str, Callable] = {
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "exp": np.exp,
    "abs": np.abs, "sin": np.sin, "cos": np.cos,
}


def compile_expr(e: Expr, bindings: Mapping[str, float] | None = None) -> Callable:
    """Turn an expression into a function of r (scalar or numpy array)."""
    bindings = dict(bindings or {})

    def build(node: Expr) -> Callable:
        if isinstance(node, Num):
            v = node.value
            return lambda r: v
        if isinstance(node, Var):
            return lambda r: r
        if isinstance(node, Name):
            if node.name in CONSTANTS:
                v = CONSTANTS[node.name]
            elif node.name in bindings:
                v = float(bindings[node.name])
            else:
                raise UnboundParameterError(f"parameter '{node.name}' is not bound")
            return lambda r: v
        if isinstance(node, Neg):
            a = build(node.arg)
            return lambda r: -a(r)
        if isinstance(node, Bin):
            lf, rf = build(node.left), build(node.right)
            op = node.op
            if op == "+":
                return lambda r: lf(r) + rf(r)
            if op == "-":
                return lambda r: lf(r) - rf(r)
            if op == "*":
                return lambda r: lf(r) * rf(r)
            if op == "/":
                def div(r):
                    den = rf(r)
                    if np.any(np.asarray(den) == 0.0):
                        raise DomainError("division by zero", to_source(node))
                    return lf(r) / den
                return div

            def pw(r):
                with np.errstate(all="ignore"):
                    out = np.power(np.asarray(lf(r), dtype=float), rf(r))
                return _checked(out, node, "power undefined")
            return pw
        assert isinstance(node, Call)
        name = node.func
        if name == "besselj":
            order = float(build(node.args[0])(0.0))
            xf = build(node.args[1])

            def bj(r):
                x = np.asarray(xf(r), dtype=float)
                try:
                    return specfun.bessel_j_array(order, x) if x.ndim else specfun.bessel_j(order, float(x))
                except specfun.DomainError as exc:
                    raise DomainError(str(exc), to_source(node)) from None
            return bj
        a = build(node.args[0])
        if name == "ln":
            def ln(r):
                x = a(r)
                if np.any(np.asarray(x) <= 0.0):
                    raise DomainError("logarithm of a non-positive number", to_source(node))
                return np.log(x)
            return ln
        if name == "sqrt":
            def sq(r):
                x = a(r)
                if np.any(np.asarray(x) < 0.0):
                    raise DomainError("square root of a negative number", to_source(node))
                return np.sqrt(x)
            return sq
        if name == "coth":
            def coth(r):
                x = a(r)
                if np.any(np.asarray(x) == 0.0):
                    raise DomainError("coth is undefined at 0", to_source(node))
                return 1.0 / np.tanh(x)
            return coth
        if name == "sign":
            def sg(r):
                x = a(r)
                if np.any(np.asarray(x) == 0.0):
                    raise DomainError("sign is undefined at 0", to_source(node))
                return np.sign(x)
            return sg
        fn = _UNARY[name]

        def call(r):
            with np.errstate(all="ignore"):
                out = fn(a(r))
            return _checked(out, node)
        return call

    f = build(e)

    def run(r):
        out = f(r)
        return _checked(out, e)

    return run


def evaluate(e: Expr, r, bindings: Mapping[str, float] | None = None):
    """Evaluate e at r (a float or numpy array) with the given parameter bindings."""
    out = compile_expr(e, bindings)(r)
    if np.ndim(out) == 0:
        return float(out)
    return out


# -- differentiation -------------------------------------------------------

ZERO = Num(0.0)
ONE = Num(1.0)


def _is_num(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Bin("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return Neg(b)
    return Bin("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Bin("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    return Bin("/", a, b)


def _neg(a: Expr) -> Expr:
    return ZERO if _is_num(a, 0.0) else Neg(a)


def deriv(e: Expr) -> Expr:
    """Symbolic d/dr.  No simplification beyond folding 0 and 1."""
    if isinstance(e, (Num, Name)):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(deriv(e.arg))
    if isinstance(e, Bin):
        u, v = e.left, e.right
        if e.op == "+":
            return _add(deriv(u), deriv(v))
        if e.op == "-":
            return _sub(deriv(u), deriv(v))
        if e.op == "*":
            return _add(_mul(deriv(u), v), _mul(u, deriv(v)))
        if e.op == "/":
            return _div(_sub(_mul(deriv(u), v), _mul(u, deriv(v))), Bin("^", v, Num(2.0)))
        # u^c with c free of r
        du = deriv(u)
        if _is_num(du, 0.0):
            return ZERO
        return _mul(_mul(v, Bin("^", u, _sub(v, ONE))), du)
    assert isinstance(e, Call)
    if e.func == "besselj":
        raise UnsupportedNodeError("deriv does not support besselj; use the catalog's closed-form derivative")
    u = e.args[0]
    du = deriv(u)
    if _is_num(du, 0.0):
        return ZERO
    f = e.func
    if f == "sinh":
        outer = Call("cosh", (u,))
    elif f == "cosh":
        outer = Call("sinh", (u,))
    elif f == "tanh":
        outer = _div(ONE, Bin("^", Call("cosh", (u,)), Num(2.0)))
    elif f == "coth":
        outer = Neg(_div(ONE, Bin("^", Call("sinh", (u,)), Num(2.0))))
    elif f == "exp":
        outer = Call("exp", (u,))
    elif f == "ln":
        return _div(du, u)
    elif f == "abs":
        outer = Call("sign", (u,))
    elif f == "sqrt":
        return _div(du, _mul(Num(2.0), Call("sqrt", (u,))))
    elif f == "sin":
        outer = Call("cos", (u,))
    elif f == "cos":
        outer = Neg(Call("sin", (u,)))
    elif f == "sign":
        return ZERO
    else:  # pragma: no cover - FUNCTIONS is closed
        raise UnsupportedNodeError(f"no derivative rule for {f}")
    return _mul(outer, du)
