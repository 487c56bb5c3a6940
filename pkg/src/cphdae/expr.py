"""One-variable expression language used for source waveforms and
nonlinear element laws.

Grammar (lowest to highest precedence)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?          # right associative
    atom  := NUMBER | 'pi' | NAME | FUNC '(' expr ')' | '(' expr ')'

so ``-t^2`` is ``-(t^2)`` and ``2^-1`` is ``2^(-1)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

from .errors import DomainError, ForbiddenVariable, NetlistSyntaxError

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
}
VARIABLES = ("t", "q", "phi", "i", "v")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Pi, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str, line: int, col0: int) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip())
            raise NetlistSyntaxError(line, col0 + pos + bad, f"unexpected character {text[pos + bad]!r}")
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), col0 + start))
        pos = m.end()
    toks.append(("end", "", col0 + len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, allowed_var: str | None, line: int, col0: int):
        self.toks = _tokenize(text, line, col0)
        self.k = 0
        self.allowed = allowed_var
        self.line = line

    def peek(self):
        return self.toks[self.k]

    def take(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def fail(self, msg: str, tok=None):
        tok = tok or self.peek()
        raise NetlistSyntaxError(self.line, tok[2], msg)

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] != "op":
            self.fail(f"expected {value!r}", tok)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, col = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val == "pi":
                return Pi()
            if val not in VARIABLES:
                raise NetlistSyntaxError(self.line, col, f"unknown name {val!r}")
            if self.allowed is not None and val != self.allowed:
                raise ForbiddenVariable(
                    f"line {self.line}, col {col}: variable {val!r} not allowed here (expected {self.allowed!r})")
            return Var(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('" if kind != "end" else "unexpected end of expression",
                  (kind, val, col))
        raise AssertionError  # unreachable


def parse_expr(text: str, allowed_var: str | None = None, *, line: int = 1, col: int = 1) -> Node:
    """Parse ``text`` into an AST; ``allowed_var`` restricts the free variable."""
    if allowed_var is not None and allowed_var not in VARIABLES:
        raise ValueError(f"allowed_var must be one of {VARIABLES}")
    return _Parser(text, allowed_var, line, col).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return 4 if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _wrap(node: Node, ok: bool) -> str:
    s = pretty(node)
    return s if ok else f"({s})"


def pretty(node: Node) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value) if node.value >= 0 else f"({node.value!r})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _prec(node.arg) >= 3)
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    p = _prec(node)
    if node.op == "^":
        return _wrap(node.left, _prec(node.left) == 5) + "^" + _wrap(node.right, _prec(node.right) >= 3)
    left = _wrap(node.left, _prec(node.left) >= p)
    right = _wrap(node.right, _prec(node.right) > p)
    return f"{left}{node.op}{right}" if p == 2 else f"{left} {node.op} {right}"


def free_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Neg, Call)):
        return free_vars(node.arg)
    if isinstance(node, BinOp):
        return free_vars(node.left) | free_vars(node.right)
    return set()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _pow(a: float, b: float) -> float:
    return math.pow(a, b)


_BIN = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _pow,
}


def _build(node: Node) -> Callable[[float], float]:
    if isinstance(node, Num):
        c = node.value
        return lambda x: c
    if isinstance(node, Pi):
        return lambda x: math.pi
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        f = _build(node.arg)
        return lambda x: -f(x)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        g = _build(node.arg)
        return lambda x: fn(g(x))
    op = _BIN[node.op]
    fl, fr = _build(node.left), _build(node.right)
    return lambda x: op(fl(x), fr(x))


@lru_cache(maxsize=None)
def compile_expr(node: Node) -> Callable[[float], float]:
    """Return a checked scalar function of the expression's free variable."""
    raw = _build(node)

    def fn(x: float) -> float:
        try:
            y = raw(float(x))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{pretty(node)} at {x!r}: {exc}") from None
        if not math.isfinite(y):
            raise DomainError(f"{pretty(node)} at {x!r} is not finite")
        return y

    return fn


def eval_expr(node: Node, value: float) -> float:
    return compile_expr(node)(value)


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def _const(node: Node) -> float | None:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return -node.arg.value
    return None


def num(value: float) -> Node:
    return Num(value) if value >= 0 else Neg(Num(-value))


def _add(a: Node, b: Node) -> Node:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return num(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    return BinOp("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return num(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a: Node) -> Node:
    ca = _const(a)
    if ca is not None:
        return num(-ca)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Node, b: Node) -> Node:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return num(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return Num(0.0)
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    return BinOp("*", a, b)


def _div(a: Node, b: Node) -> Node:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and cb != 0.0:
        return num(ca / cb)
    if ca == 0.0:
        return Num(0.0)
    if cb == 1.0:
        return a
    return BinOp("/", a, b)


def _pow_node(a: Node, b: Node) -> Node:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        try:
            return num(math.pow(ca, cb))
        except (ValueError, OverflowError):
            pass
    if cb == 1.0:
        return a
    if cb == 0.0:
        return Num(1.0)
    return BinOp("^", a, b)


def diff_expr(node: Node) -> Node:
    """Symbolic derivative with respect to the expression's free variable."""
    if isinstance(node, (Num, Pi)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return _neg(diff_expr(node.arg))
    if isinstance(node, Call):
        a = node.arg
        da = diff_expr(a)
        if _const(da) == 0.0:
            return Num(0.0)
        outer = {
            "sin": lambda: Call("cos", a),
            "cos": lambda: _neg(Call("sin", a)),
            "exp": lambda: Call("exp", a),
            "ln": lambda: _div(Num(1.0), a),
            "sqrt": lambda: _div(Num(1.0), _mul(Num(2.0), Call("sqrt", a))),
            "tanh": lambda: _sub(Num(1.0), _pow_node(Call("tanh", a), Num(2.0))),
        }[node.func]()
        return _mul(outer, da)
    a, b = node.left, node.right
    da, db = diff_expr(a), diff_expr(b)
    if node.op == "+":
        return _add(da, db)
    if node.op == "-":
        return _sub(da, db)
    if node.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if node.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow_node(b, Num(2.0)))
    # power
    if not free_vars(b):
        return _mul(_mul(b, _pow_node(a, _sub(b, Num(1.0)))), da)
    return _mul(node, _add(_mul(db, Call("ln", a)), _div(_mul(b, da), a)))
