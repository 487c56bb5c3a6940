import pytest
from hypothesis import given, settings, strategies as st

from cphdae import circuits
from cphdae.errors import (DisconnectedGraph, DuplicateName, NetlistSyntaxError, NonContiguousVertices,
                           SelfLoop)
from cphdae.expr import eval_expr
from cphdae.netlist import Constant, Expression, parse_netlist, read_netlist


def test_time_dependent_source():
    spec = parse_netlist("edge V1 V 1 3 {10*t*sin(200*pi*t)}\nedge R1 R 1 2 1\nedge R2 R 2 3 1\n")
    e = spec.elements[0]
    assert (e.kind, e.from_node, e.to_node) == ("V", 1, 3)
    assert isinstance(e.law, Expression)
    assert eval_expr(e.law.ast, 0.0025) == pytest.approx(10 * 0.0025, rel=1e-12)


def test_linear_resistor_constant():
    spec = parse_netlist("edge R1 R 2 3 1000\nedge V V 2 1 1\nedge G G 1 3 2")
    assert spec.elements[0].law == Constant(1000.0)


def test_unknown_kind_is_syntax_error():
    with pytest.raises(NetlistSyntaxError) as exc:
        parse_netlist("edge X Q 1 2 5\n")
    assert (exc.value.line, exc.value.col) == (1, 8)


@pytest.mark.parametrize("text,error", [
    ("edge A R 1 1 5\n", SelfLoop),
    ("edge A R 1 2 5\nedge A R 2 1 5\n", DuplicateName),
    ("edge A R 1 3 5\n", NonContiguousVertices),
    ("edge A R 1 2 5\nedge B R 3 4 5\n", DisconnectedGraph),
    ("edge A R 1 2\n", NetlistSyntaxError),
    ("edge A R 1 2 {q}\n", Exception),
    ("edge A C 1 2 {5*\n", NetlistSyntaxError),
    ("", NetlistSyntaxError),
])
def test_invalid_netlists(text, error):
    with pytest.raises(error):
        parse_netlist(text)


def test_comments_and_file_order():
    spec = parse_netlist("# header\n\nedge B R 1 2 1 # trailing\nedge A V 2 1 3\n")
    assert spec.names == ["B", "A"]


def test_shipped_circuit_files_match_builtins():
    assert read_netlist("circuits/running_example.net") == circuits.running_example()
    assert read_netlist("circuits/diode_clipper.net") == circuits.diode_clipper()


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.integers(0, 8), st.integers(0, 10**6))
def test_to_text_round_trip(n, extra, seed):
    spec = circuits.random_circuit(n, n - 1 + extra, seed)
    assert parse_netlist(spec.to_text("generated")) == spec
