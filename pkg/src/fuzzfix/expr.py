"""Small expression language for user-defined real functions.

Grammar (whitespace insignificant)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom ("^" factor)?
    atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"

Binary "+,-,*,/" are left associative, "^" is right associative and binds
tighter than unary minus, so ``-x^2`` means ``-(x^2)``.  Numbers are decimal
with optional fraction and exponent.  The only callables are ``min``, ``max``
(two or more arguments), ``abs``, ``sqrt`` and ``exp``.

Evaluation is total over the reals with explicit domain errors (division by
zero, sqrt of a negative, non-finite result) instead of NaN propagation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InputError

_FUNCTIONS = ("min", "max", "abs", "sqrt", "exp")
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class ParseError(InputError):
    """Syntax error with the byte offset and what was expected there."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.expected = expected


class EvalError(ArithmeticError):
    """Domain error during evaluation (unbound variable, div by zero, ...)."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Num | Var | Neg | BinOp | Call


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | op | eof
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        if match.lastgroup == "num":
            tokens.append(_Token("num", match.group("num"), match.start("num")))
        elif match.lastgroup == "ident":
            tokens.append(_Token("ident", match.group("ident"), match.start("ident")))
        else:
            tokens.append(_Token("op", match.group("op"), match.start("op")))
        pos = match.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.current
        if tok.kind != "op" or tok.text != op:
            raise ParseError(
                f"expected {op!r}, found {tok.text or 'end of input'!r}",
                tok.position,
                expected=(op,),
            )
        self.advance()

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Neg(self.factor())
        node = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            return BinOp("^", node, self.factor())
        return node

    def atom(self) -> Expr:
        tok = self.current
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if self.current.kind == "op" and self.current.text == "(":
                return self.call(tok)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"expected a number, name or '(', found {tok.text or 'end of input'!r}",
            tok.position,
            expected=("number", "identifier", "("),
        )

    def call(self, name_tok: _Token) -> Expr:
        name = name_tok.text
        if name not in _FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", name_tok.position)
        self.expect_op("(")
        args = [self.expr()]
        while self.current.kind == "op" and self.current.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect_op(")")
        if name in ("abs", "sqrt", "exp") and len(args) != 1:
            raise ParseError(
                f"{name} expects 1 argument, got {len(args)}", name_tok.position
            )
        if name in ("min", "max") and len(args) < 2:
            raise ParseError(
                f"{name} expects at least 2 arguments, got {len(args)}",
                name_tok.position,
            )
        return Call(name, tuple(args))


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises ParseError (with ``.position`` and ``.expected``) on bad syntax
    or an unknown function name.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    tok = parser.current
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.position)
    return node


def variables(e: Expr) -> frozenset[str]:
    """Names of all variables occurring in ``e``."""
    match e:
        case Num():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case Neg(operand):
            return variables(operand)
        case BinOp(_, left, right):
            return variables(left) | variables(right)
        case Call(_, args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= variables(a)
            return out
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, binding: dict[str, float]) -> float:
    """Evaluate ``e`` at ``binding``; the result is a finite float.

    Raises EvalError on unbound variables, division by zero, sqrt of a
    negative, or any non-finite intermediate result.
    """
    result = _eval(e, binding)
    if not math.isfinite(result):
        raise EvalError(f"non-finite result {result!r}")
    return result


def _eval(e: Expr, binding: dict[str, float]) -> float:
    match e:
        case Num(value):
            return value
        case Var(name):
            try:
                return float(binding[name])
            except KeyError:
                raise EvalError(f"unbound variable {name!r}") from None
        case Neg(operand):
            return -_eval(operand, binding)
        case BinOp(op, left, right):
            a = _eval(left, binding)
            b = _eval(right, binding)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                if b == 0.0:
                    raise EvalError("division by zero")
                return a / b
            try:
                return math.pow(a, b)
            except (ValueError, OverflowError) as exc:
                raise EvalError(f"invalid power {a}^{b}: {exc}") from None
        case Call(name, args):
            vals = [_eval(a, binding) for a in args]
            if name == "min":
                return min(vals)
            if name == "max":
                return max(vals)
            if name == "abs":
                return abs(vals[0])
            if name == "sqrt":
                if vals[0] < 0.0:
                    raise EvalError(f"sqrt of negative {vals[0]}")
                return math.sqrt(vals[0])
            return math.exp(vals[0]) if vals[0] < 700.0 else _overflow(vals[0])
    raise TypeError(f"not an expression node: {e!r}")


def _overflow(x: float) -> float:
    raise EvalError(f"exp overflow at {x}")


def eval_on_arrays(e: Expr, **arrays) -> np.ndarray:
    """Vectorized evaluation over numpy arrays (internal fast path).

    Binding values may be scalars or broadcastable arrays; the result is
    broadcast to their common shape.  Domain errors are detected after the
    fact via finiteness of the result.
    """
    bound = {k: np.asarray(v, dtype=float) for k, v in arrays.items()}
    shape = np.broadcast_shapes(*(a.shape for a in bound.values())) if bound else ()
    with np.errstate(all="ignore"):
        result = np.asarray(_eval_array(e, bound), dtype=float)
    result = np.broadcast_to(result, shape) if shape else result
    if not np.all(np.isfinite(result)):
        raise EvalError("non-finite result in array evaluation")
    return result


def _eval_array(e: Expr, bound: dict[str, np.ndarray]):
    match e:
        case Num(value):
            return value
        case Var(name):
            try:
                return bound[name]
            except KeyError:
                raise EvalError(f"unbound variable {name!r}") from None
        case Neg(operand):
            return -np.asarray(_eval_array(operand, bound))
        case BinOp(op, left, right):
            a = _eval_array(left, bound)
            b = _eval_array(right, bound)
            if op == "+":
                return np.add(a, b)
            if op == "-":
                return np.subtract(a, b)
            if op == "*":
                return np.multiply(a, b)
            if op == "/":
                return np.divide(a, b)
            return np.power(a, b)
        case Call(name, args):
            vals = [np.asarray(_eval_array(a, bound), dtype=float) for a in args]
            if name == "min":
                out = vals[0]
                for v in vals[1:]:
                    out = np.minimum(out, v)
                return out
            if name == "max":
                out = vals[0]
                for v in vals[1:]:
                    out = np.maximum(out, v)
                return out
            if name == "abs":
                return np.abs(vals[0])
            if name == "sqrt":
                return np.sqrt(vals[0])
            return np.exp(vals[0])
    raise TypeError(f"not an expression node: {e!r}")
