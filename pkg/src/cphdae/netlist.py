"""Netlist reader/writer.

File format, one element per line::

    # comment
    edge <name> <kind> <from> <to> <value>

``kind`` is one of V, I, C, L, R, G. ``value`` is a decimal literal (a
linear law or a constant source) or ``{expr}`` in the variable implied by
the kind: t for sources, q for C (gives v), phi for L (gives i), i for R
(gives v) and v for G (gives i).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import (DisconnectedGraph, DuplicateName, NetlistSyntaxError,
                     NonContiguousVertices, SelfLoop)
from .expr import Node, parse_expr, pretty

KINDS = ("V", "I", "C", "L", "R", "G")
KIND_VARIABLE = {"V": "t", "I": "t", "C": "q", "L": "phi", "R": "i", "G": "v"}
DISSIPATIVE = ("R", "G")


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Expression:
    ast: Node


Law = Union[Constant, Expression]


@dataclass(frozen=True)
class ElementSpec:
    name: str
    kind: str
    from_node: int
    to_node: int
    law: Law

    def value_text(self) -> str:
        if isinstance(self.law, Constant):
            return repr(self.law.value)
        return "{" + pretty(self.law.ast) + "}"


@dataclass(frozen=True)
class CircuitSpec:
    elements: tuple[ElementSpec, ...]

    @property
    def n(self) -> int:
        return max(max(e.from_node, e.to_node) for e in self.elements)

    @property
    def b(self) -> int:
        return len(self.elements)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.elements]

    @property
    def kinds(self) -> list[str]:
        return [e.kind for e in self.elements]

    def index(self, name: str) -> int:
        for k, e in enumerate(self.elements):
            if e.name == name:
                return k
        raise KeyError(name)

    def to_text(self, header: str | None = None) -> str:
        lines = []
        if header:
            lines.extend(f"# {h}" for h in header.splitlines())
        for e in self.elements:
            lines.append(f"edge {e.name} {e.kind} {e.from_node} {e.to_node} {e.value_text()}")
        return "\n".join(lines) + "\n"


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_FIELDS = re.compile(r"\s*(\S+)")


def _strip_comment(line: str) -> str:
    k = line.find("#")
    return line if k < 0 else line[:k]


def _parse_line(text: str, lineno: int) -> ElementSpec:
    fields = []
    pos = 0
    for _ in range(5):
        m = _FIELDS.match(text, pos)
        if m is None:
            raise NetlistSyntaxError(lineno, len(text.rstrip()) + 1, "too few fields (need: edge name kind from to value)")
        fields.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    rest = text[pos:]
    value = rest.strip()
    vcol = pos + (len(rest) - len(rest.lstrip())) + 1
    (kw, kwcol), (name, ncol), (kind, kcol), (fr, fcol), (to, tcol) = fields
    if kw != "edge":
        raise NetlistSyntaxError(lineno, kwcol, f"expected 'edge', found {kw!r}")
    if not _NAME.match(name):
        raise NetlistSyntaxError(lineno, ncol, f"bad element name {name!r}")
    if kind not in KINDS:
        raise NetlistSyntaxError(lineno, kcol, f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    nodes = []
    for tok, col in ((fr, fcol), (to, tcol)):
        if not tok.isdigit() or int(tok) < 1:
            raise NetlistSyntaxError(lineno, col, f"vertex id must be a positive integer, found {tok!r}")
        nodes.append(int(tok))
    if not value:
        raise NetlistSyntaxError(lineno, vcol, "missing value")
    if value.startswith("{"):
        if not value.endswith("}"):
            raise NetlistSyntaxError(lineno, vcol + len(value) - 1, "unterminated '{'")
        law: Law = Expression(parse_expr(value[1:-1], KIND_VARIABLE[kind], line=lineno, col=vcol + 1))
    elif _NUMBER.match(value):
        law = Constant(float(value))
    else:
        raise NetlistSyntaxError(lineno, vcol, f"bad value {value!r}")
    if nodes[0] == nodes[1]:
        raise SelfLoop(f"line {lineno}: element {name} joins vertex {nodes[0]} to itself")
    return ElementSpec(name, kind, nodes[0], nodes[1], law)


def _components(n: int, pairs: Iterable[tuple[int, int]]) -> int:
    parent = list(range(n + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    count = n
    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            count -= 1
    return count


def validate_circuit(elements: Iterable[ElementSpec]) -> CircuitSpec:
    """Check names, vertex numbering and connectivity; return the CircuitSpec."""
    elements = tuple(elements)
    if not elements:
        raise NetlistSyntaxError(0, 0, "netlist contains no elements")
    seen: set[str] = set()
    for e in elements:
        if e.name in seen:
            raise DuplicateName(f"element name {e.name!r} used twice")
        seen.add(e.name)
        if e.from_node == e.to_node:
            raise SelfLoop(f"element {e.name} joins vertex {e.from_node} to itself")
    verts = {e.from_node for e in elements} | {e.to_node for e in elements}
    n = max(verts)
    if verts != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - verts)
        raise NonContiguousVertices(f"vertices must be 1..{n}; missing {missing}")
    if _components(n, ((e.from_node, e.to_node) for e in elements)) != 1:
        raise DisconnectedGraph("circuit graph is not connected")
    return CircuitSpec(elements)


def parse_netlist(text: str) -> CircuitSpec:
    elements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        elements.append(_parse_line(line, lineno))
    return validate_circuit(elements)


def read_netlist(path) -> CircuitSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())
