"""Scalar-field expressions: parsing, evaluation, exact differentiation.

Grammar (whitespace-insensitive, standard precedence, no implicit
multiplication)::

    expr   := term  {("+" | "-") term}
    term   := unary {("*" | "/") unary}
    unary  := "-" unary | power
    power  := atom  ["^" unary]          (right-associative)
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Variables are restricted to ``x, y, t, theta``; ``pi`` is the only named
constant.  Functions: ``sin, cos, exp, bump, dbump``.  ``bump`` is the fixed
smooth plateau with ``bump(s) = 1`` for ``|s| <= 1/8``, ``0`` for
``|s| >= 1/4`` and a normalized exp(-1/u) transition in between; ``dbump``
is its derivative.  Higher derivatives (``d2bump`` .. ``d4bump``) appear in
differentiated trees and are accepted by the parser for round-tripping.

Expressions are immutable; evaluation is numpy-vectorized and a compiled
fast path is available through :func:`compiled`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expr",
    "ParseError",
    "EvalError",
    "parse",
    "differentiate",
    "substitute",
    "evaluate",
    "to_str",
    "compiled",
    "compiled_scalar",
    "compiled_multi",
    "bump_value",
    "VARIABLES",
    "FUNCTIONS",
]

VARIABLES = ("x", "y", "t", "theta")
FUNCTIONS = ("sin", "cos", "exp", "bump", "dbump")
_ALL_FUNCTIONS = ("sin", "cos", "exp", "bump", "dbump", "d2bump", "d3bump", "d4bump")
_CONSTANTS = {"pi": math.pi}


class ParseError(ValueError):
    pass


class EvalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Bump plateau: 1 on [-1/8, 1/8], 0 off (-1/4, 1/4), transition via the
# logistic of q(u) = 1/(1-u) - 1/u on the rescaled coordinate u = 8|s| - 1.
# Derivatives are closed-form through order 4.
# ---------------------------------------------------------------------------

def _transition(u: np.ndarray, k: int) -> np.ndarray:
    """k-th derivative of the descending smoothstep S(u), S(0)=1, S(1)=0."""
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    iu = 1.0 / u
    iv = 1.0 / (1.0 - u)
    q = iv - iu
    with np.errstate(over="ignore"):
        s = 1.0 / (1.0 + np.exp(q))  # sigma(-q)
    if k == 0:
        return s
    s1 = s * (1.0 - s)
    z1 = -(iv * iv + iu * iu)
    if k == 1:
        return s1 * z1
    s2 = s1 * (1.0 - 2.0 * s)
    z2 = -2.0 * (iv ** 3 - iu ** 3)
    if k == 2:
        return s2 * z1 * z1 + s1 * z2
    s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1
    z3 = -6.0 * (iv ** 4 + iu ** 4)
    if k == 3:
        return s3 * z1 ** 3 + 3.0 * s2 * z1 * z2 + s1 * z3
    s4 = s3 * (1.0 - 2.0 * s) - 6.0 * s1 * s2
    z4 = -24.0 * (iv ** 5 - iu ** 5)
    if k == 4:
        return (
            s4 * z1 ** 4
            + 6.0 * s3 * z1 * z1 * z2
            + s2 * (3.0 * z2 * z2 + 4.0 * z1 * z3)
            + s1 * z4
        )
    raise EvalError(f"bump derivatives beyond order 4 are not implemented (got {k})")


def bump_value(s, k: int = 0):
    """k-th derivative of the plateau bump at ``s`` (vectorized)."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    u = 8.0 * a - 1.0
    mid = (a > 0.125) & (a < 0.25)
    out = np.zeros(np.broadcast(s, a).shape)
    if k == 0:
        out = np.where(a <= 0.125, 1.0, 0.0)
    val = _transition(np.where(mid, u, 0.5), k) * 8.0 ** k
    if k % 2 == 1:
        val = val * np.sign(s)
    out = np.where(mid, val, out)
    return out if out.ndim else float(out)


def _bump_fn(k: int):
    return lambda s: bump_value(s, k)


_FN_IMPL = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "bump": _bump_fn(0),
    "dbump": _bump_fn(1),
    "d2bump": _bump_fn(2),
    "d3bump": _bump_fn(3),
    "d4bump": _bump_fn(4),
}

_FN_DERIV_NAME = {"bump": "dbump", "dbump": "d2bump", "d2bump": "d3bump", "d3bump": "d4bump"}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Base node; subclasses are Const, Var, Neg, BinOp, Call."""

    def __call__(self, **env):
        return evaluate(self, env)

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            toks.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_e = False
            while j < n and (
                src[j].isdigit()
                or src[j] == "."
                or src[j] in "eE"
                or (seen_e and src[j] in "+-" and src[j - 1] in "eE")
            ):
                if src[j] in "eE":
                    seen_e = True
                j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"syntax error at offset {i}: bad number literal {text!r}")
            toks.append(("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(("name", src[i:j], i))
            i = j
            continue
        raise ParseError(f"syntax error at offset {i}: unexpected character {ch!r}")
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind == "op" and text == op:
            return self.next()
        raise ParseError(
            f"syntax error at offset {off}: expected {op!r}, got {text or 'end of input'!r}"
        )

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(
                f"syntax error at offset {off}: expected operator or end of input, got {text!r}"
            )
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.next()
                e = BinOp(text, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.next()
                e = BinOp(text, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.next()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, off = self.next()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _ALL_FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text in _CONSTANTS:
                return Const(_CONSTANTS[text])
            if text in VARIABLES:
                return Var(text)
            raise ParseError(
                f"unknown identifier {text!r} at offset {off}: variables are "
                f"{', '.join(VARIABLES)}; functions are {', '.join(FUNCTIONS)}"
            )
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(
            f"syntax error at offset {off}: expected number, name or '(', "
            f"got {text or 'end of input'!r}"
        )


def parse(src: Union[str, Expr]) -> Expr:
    """Parse expression text into an immutable tree (idempotent on Expr)."""
    if isinstance(src, Expr):
        return src
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}")
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, BinOp):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        return np.power(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else a ** b
    if isinstance(e, Call):
        return _FN_IMPL[e.fn](evaluate(e.arg, env))
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation with light simplification (folding happens only here, so
# parse -> print round-trips are preserved).
# ---------------------------------------------------------------------------

def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return Neg(b) if not _is_const(b) else Const(-b.value)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic partial derivative of ``e`` with respect to ``var``."""
    if var not in VARIABLES:
        raise EvalError(f"cannot differentiate with respect to {var!r}")
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        d = differentiate(e.arg, var)
        return Const(-d.value) if _is_const(d) else Neg(d)
    if isinstance(e, BinOp):
        da = differentiate(e.left, var)
        db = differentiate(e.right, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        if e.op == "/":
            num = _sub(_mul(da, e.right), _mul(e.left, db))
            return _div(num, BinOp("^", e.right, Const(2.0)))
        # power: general a^b via a^b * (db*ln a + b*da/a) needs ln; restrict to
        # constant exponents, which is all the field grammar promises.
        if not _is_const(e.right):
            raise EvalError("only constant exponents can be differentiated")
        n = e.right.value
        if n == 0.0:
            return Const(0.0)
        if n == 1.0:
            return da
        pw = e.left if n == 2.0 else BinOp("^", e.left, Const(n - 1.0))
        return _mul(_mul(Const(n), pw), da)
    if isinstance(e, Call):
        da = differentiate(e.arg, var)
        if e.fn == "sin":
            outer = Call("cos", e.arg)
        elif e.fn == "cos":
            outer = Neg(Call("sin", e.arg))
        elif e.fn == "exp":
            outer = Call("exp", e.arg)
        elif e.fn in _FN_DERIV_NAME:
            outer = Call(_FN_DERIV_NAME[e.fn], e.arg)
        else:
            raise EvalError(f"no derivative rule for {e.fn!r}")
        return _mul(outer, da)
    raise TypeError(f"not an Expr node: {e!r}")


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by sub-expressions."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.fn, substitute(e.arg, mapping))
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# Printing: minimal parentheses, spaces around +/- only, so that
# print(parse(s)) equals s up to whitespace on paren-minimal input.
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 2  # binds like a product
    return 9


def to_str(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        if v == math.pi:
            return "pi"
        return repr(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        s = to_str(e.arg)
        if _prec(e.arg) <= 2:
            s = f"({s})"
        return f"-{s}"
    if isinstance(e, Call):
        return f"{e.fn}({to_str(e.arg)})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        ls = to_str(e.left)
        rs = to_str(e.right)
        if e.op == "^":
            if _prec(e.left) <= p:
                ls = f"({ls})"
            # grammar: the exponent is a unary, so a bare minus is fine there
            if _prec(e.right) < p and not isinstance(e.right, Neg):
                rs = f"({rs})"
        else:
            if _prec(e.left) < p:
                ls = f"({ls})"
            # - and / are left-associative: parenthesize a right child of
            # equal precedence; a unary minus binds its whole operand, so it
            # stays bare after * and /.
            rp = _prec(e.right)
            neg_after_mul = e.op in "*/" and isinstance(e.right, Neg)
            if (rp < p or (rp == p and e.op in "-/")) and not neg_after_mul:
                rs = f"({rs})"
        if e.op in "+-":
            return f"{ls} {e.op} {rs}"
        return f"{ls}{e.op}{rs}"
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# Compiled fast paths
# ---------------------------------------------------------------------------

def _source(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_source(e.arg)})"
    if isinstance(e, BinOp):
        op = "**" if e.op == "^" else e.op
        return f"({_source(e.left)}{op}{_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({_source(e.arg)})"
    raise TypeError(f"not an Expr node: {e!r}")


_NUMPY_NS = {"__builtins__": {}, **_FN_IMPL}

_SCALAR_NS = {
    "__builtins__": {},
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    **{k: _FN_IMPL[k] for k in ("bump", "dbump", "d2bump", "d3bump", "d4bump")},
}


def compiled(e: Union[str, Expr]):
    """Compile to a numpy-vectorized callable ``f(x=..., y=..., t=..., theta=...)``.

    Unused variables may be omitted at call time; the result broadcasts like
    the inputs (a constant expression returns a scalar).
    """
    e = parse(e)
    src = f"lambda x=0.0, y=0.0, t=0.0, theta=0.0: ({_source(e)})"
    return eval(src, dict(_NUMPY_NS))


def compiled_scalar(e: Union[str, Expr]):
    """Compile to a scalar math-module callable (fast sequential iteration)."""
    e = parse(e)
    src = f"lambda x=0.0, y=0.0, t=0.0, theta=0.0: ({_source(e)})"
    return eval(src, dict(_SCALAR_NS))


def compiled_multi(exprs):
    """Compile several expressions into one callable returning a tuple.

    Structurally repeated subtrees (hash-consed via the frozen dataclass
    equality) are evaluated once and shared across all outputs, which makes
    the flow right-hand sides several times cheaper than per-expression
    compilation.
    """
    exprs = [parse(e) for e in exprs]
    lines: list[str] = []
    memo: dict[Expr, str] = {}
    count = [0]

    def emit(e: Expr) -> str:
        if e in memo:
            return memo[e]
        if isinstance(e, Const):
            memo[e] = repr(e.value)
            return memo[e]
        if isinstance(e, Var):
            memo[e] = e.name
            return memo[e]
        if isinstance(e, Neg):
            src = f"(-{emit(e.arg)})"
        elif isinstance(e, BinOp):
            op = "**" if e.op == "^" else e.op
            src = f"({emit(e.left)}{op}{emit(e.right)})"
        elif isinstance(e, Call):
            src = f"{e.fn}({emit(e.arg)})"
        else:
            raise TypeError(f"not an Expr node: {e!r}")
        name = f"_v{count[0]}"
        count[0] += 1
        lines.append(f"    {name} = {src}")
        memo[e] = name
        return name

    outs = [emit(e) for e in exprs]
    body = "\n".join(lines) if lines else "    pass"
    src = (
        "def _multi(x=0.0, y=0.0, t=0.0, theta=0.0):\n"
        f"{body}\n"
        f"    return ({', '.join(outs)},)"
    )
    ns = dict(_NUMPY_NS)
    exec(src, ns)
    return ns["_multi"]
