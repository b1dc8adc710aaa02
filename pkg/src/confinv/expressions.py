"""Arithmetic expressions over named variables.

Grammar (standard precedence, ``^``/``**`` right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Evaluation is generic: variables may be bound to floats, numpy arrays or
:class:`~confinv.jets.Jet` objects, and the same tree evaluates on all of them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from . import jets
from .errors import ExpressionSyntaxError, UnknownIdentifierError


class Expression:
    """Base class of expression tree nodes."""

    def __add__(self, other):
        return BinOp("+", self, as_expression(other))

    def __radd__(self, other):
        return BinOp("+", as_expression(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expression(other))

    def __rsub__(self, other):
        return BinOp("-", as_expression(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expression(other))

    def __rmul__(self, other):
        return BinOp("*", as_expression(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expression(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expression(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, other):
        return BinOp("^", self, as_expression(other))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=False)
class Num(Expression):
    value: float


@dataclass(frozen=True, eq=False)
class Var(Expression):
    name: str


@dataclass(frozen=True, eq=False)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True, eq=False)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=False)
class Call(Expression):
    func: str
    args: tuple


FUNCTIONS: dict[str, tuple[int, Callable]] = {
    "sin": (1, jets.sin),
    "cos": (1, jets.cos),
    "exp": (1, jets.exp),
    "log": (1, jets.log),
    "sqrt": (1, jets.sqrt),
    "pow": (2, jets.power),
}
CONSTANTS = {"pi": math.pi}

ExprLike = Union[Expression, float, int, str]


def as_expression(x: ExprLike) -> Expression:
    if isinstance(x, Expression):
        return x
    if isinstance(x, str):
        return parse_expression(x)
    return Num(float(x))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[:pos]) + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, variables: Iterable[str] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = None if variables is None else set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {what}", pos, self.text)

    def parse(self) -> Expression:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            arg = self.unary()
            return Neg(arg) if val == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(val, pos)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val][0]
                if len(args) != arity:
                    raise ExpressionSyntaxError(
                        f"{val} takes {arity} argument(s), got {len(args)}", pos, self.text
                    )
                return Call(val, tuple(args))
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if self.variables is not None and val not in self.variables:
                raise UnknownIdentifierError(val, pos)
            return Var(val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", pos, self.text)


def parse_expression(text: str, variables: Iterable[str] | None = None) -> Expression:
    """Parse ``text`` into an expression tree.

    If ``variables`` is given, any other free name raises
    :class:`UnknownIdentifierError`.
    """
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# evaluation / manipulation

def _binop(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if isinstance(a, (int, float)) and isinstance(b, (int, float)):
            return float(np.float64(a) / b)  # IEEE inf/nan on plain scalars, as for arrays
        return a / b
    return jets.power(a, b)


def evaluate(expr: Expression, env: Mapping[str, object]):
    """Evaluate ``expr`` with variables bound by ``env``.

    Shared subtrees (as produced by :func:`substitute`) are evaluated once.
    """
    memo: dict[int, object] = {}

    def ev(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            out = node.value
        elif isinstance(node, Var):
            try:
                out = env[node.name]
            except KeyError:
                raise UnknownIdentifierError(node.name) from None
        elif isinstance(node, Neg):
            out = -ev(node.arg)
        elif isinstance(node, BinOp):
            out = _binop(node.op, ev(node.left), ev(node.right))
        elif isinstance(node, Call):
            out = FUNCTIONS[node.func][1](*(ev(a) for a in node.args))
        else:
            raise TypeError(f"not an expression node: {node!r}")
        memo[key] = out
        return out

    return ev(expr)


def free_variables(expr: Expression) -> set[str]:
    seen: set[int] = set()
    names: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, Call):
            stack.extend(node.args)
    return names


def substitute(expr: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions, sharing untouched and repeated subtrees."""
    memo: dict[int, Expression] = {}

    def sub(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, Neg):
            out = Neg(sub(node.arg))
        elif isinstance(node, BinOp):
            out = BinOp(node.op, sub(node.left), sub(node.right))
        elif isinstance(node, Call):
            out = Call(node.func, tuple(sub(a) for a in node.args))
        else:
            out = node
        memo[key] = out
        return out

    return sub(expr)


def is_zero(expr: Expression) -> bool:
    return isinstance(expr, Num) and expr.value == 0.0


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(expr: Expression) -> str:
    """Render back to parseable text (fully re-parseable, minimal parentheses)."""

    def go(node, parent_prec=0, right=False):
        if isinstance(node, Num):
            s = repr(float(node.value))
            if node.value < 0:
                s = f"({s})"
            return s
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Call):
            return f"{node.func}({', '.join(go(a) for a in node.args)})"
        if isinstance(node, Neg):
            s = "-" + go(node.arg, 3)
            return f"({s})" if parent_prec >= 3 else s
        prec = _PREC[node.op]
        if node.op == "^":
            s = f"{go(node.left, prec + 1)}^{go(node.right, prec)}"
        else:
            s = f"{go(node.left, prec)} {node.op} {go(node.right, prec + 1)}"
        return f"({s})" if prec < parent_prec or (prec == parent_prec and right) else s

    return go(expr)


def evaluate_float(expr: Expression, **values) -> float:
    return float(np.asarray(evaluate(expr, values)))


def _builder(name):
    def f(*args):
        return Call(name, tuple(as_expression(a) for a in args))

    f.__name__ = name
    f.__doc__ = f"Expression node ``{name}(...)``."
    return f


sin = _builder("sin")
cos = _builder("cos")
exp = _builder("exp")
log = _builder("log")
sqrt = _builder("sqrt")
pow = _builder("pow")
