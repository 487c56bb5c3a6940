import numpy as np
import pytest

from cphdae import circuits
from cphdae.errors import CurrentCutset, NotATree, VoltageCycle
from cphdae.graph import (CircuitGraph, check_wellposed, cumulative_ranks, fundamental_sets, incidence,
                          kron_matrix, normal_tree_kruskal, normal_tree_rref, validate_tree)
from cphdae.model import BlockF, split_edges
from cphdae.netlist import parse_netlist
from cphdae.validation import brute_cycles_cutsets
from util import random_corpus

F_RUNNING = np.array([[1, -1, 0, 0], [-1, 0, 1, 0], [-1, 1, 1, 1], [0, -1, 0, -1]])


@pytest.fixture(scope="module")
def g_run():
    return CircuitGraph.from_spec(circuits.running_example())


@pytest.fixture(scope="module")
def corpus():
    return [CircuitGraph.from_spec(s) for s in random_corpus(200, seed0=100)]


def _incremental_ranks(A, kinds):
    out, cols, r = [], [], 0
    for cls in "VCDL":
        for k, kd in enumerate(kinds):
            if {"R": "D", "G": "D"}.get(kd, kd) == cls:
                cols.append(k)
        out.append(np.linalg.matrix_rank(A[:, cols].astype(float)) if cols else 0)
    return tuple(out)


def test_incidence_and_kron_running_example(g_run):
    A = incidence(g_run)
    assert not A.sum(axis=0).any()
    nt = validate_tree(g_run, ["V", "C1", "R", "L1"])
    assert nt.tree == (0, 1, 4, 5) and nt.cotree == (2, 3, 6, 7)
    assert (nt.F == F_RUNNING).all()
    for drop in range(g_run.n):
        assert (kron_matrix(A, nt.tree, drop_row=drop) == F_RUNNING).all()


def test_single_loop():
    g = CircuitGraph.from_spec(circuits.vr_loop())
    assert incidence(g).tolist() == [[1, 1], [-1, -1]]
    for nt in (normal_tree_kruskal(g), normal_tree_rref(g)):
        assert nt.tree == (0,) and nt.cotree == (1,) and nt.F.tolist() == [[-1]]
    assert fundamental_sets((0,), np.array([[-1]])).cycles[1] == [(1, 1), (0, -1)]


def test_tree_algorithms_on_running_example(g_run):
    k, r = normal_tree_kruskal(g_run), normal_tree_rref(g_run)
    assert r.tree == (0, 1, 3, 5)
    for nt in (k, r):
        assert nt.twig_counts == (1, 1, 1, 1) and nt.link_counts == (1, 1, 1, 1)
        assert nt.ranks == (1, 2, 3, 4)
    assert _incremental_ranks(incidence(g_run), g_run.kinds) == (1, 2, 3, 4)


def test_fundamental_sets_running_example(g_run):
    nt = validate_tree(g_run, ["V", "C1", "R", "L1"])
    sets = fundamental_sets(nt.tree, nt.F, nt.cotree)
    names = g_run.names
    assert {names[e] for e, _ in sets.cutsets[0]} == {"V", "C2", "G", "L2"}
    assert {names[e] for e, _ in sets.cycles[2]} == {"C1", "C2", "V"}
    cycles, cutsets = brute_cycles_cutsets(g_run, nt.tree)
    assert all(sorted(sets.cycles[l]) == cycles[l] for l in nt.cotree)
    assert all(sorted(sets.cutsets[t]) == cutsets[t] for t in nt.tree)


def test_wellposedness_errors():
    g = CircuitGraph.from_spec(parse_netlist("edge V1 V 1 2 1\nedge V2 V 1 2 2\n"))
    with pytest.raises(VoltageCycle):
        check_wellposed(incidence(g), g.kinds)
    g = CircuitGraph.from_spec(parse_netlist("edge I1 I 1 2 1\n"))
    with pytest.raises(CurrentCutset):
        check_wellposed(incidence(g), g.kinds)
    rep = check_wellposed(incidence(g), g.kinds, strict=False)
    assert rep.connected and rep.a1_ok and not rep.a2_ok


def test_not_a_tree(g_run):
    with pytest.raises(NotATree):
        kron_matrix(incidence(g_run), [0, 1, 2, 4])     # V, C1, C2 form a cycle


def test_random_corpus_tree_invariants(corpus):
    for g in corpus:
        A = incidence(g)
        ranks = cumulative_ranks(A, g.kinds)
        assert ranks == _incremental_ranks(A, g.kinds)
        k, r = normal_tree_kruskal(g), normal_tree_rref(g)
        n_V = g.kinds.count("V")
        n_Cc = sum(kd == "C" for kd in g.kinds)
        for nt in (k, r):
            assert nt.normal
            assert nt.twig_counts == (n_V, ranks[1] - ranks[0], ranks[2] - ranks[1], ranks[3] - ranks[2])
            assert nt.link_counts[0] == n_Cc - ranks[1] + ranks[0]
            assert set(np.unique(nt.F)) <= {-1, 0, 1}
            assert not (A[:, list(nt.cotree)] + A[:, list(nt.tree)] @ nt.F.T).any()
            assert BlockF(nt, split_edges(nt.tree, g.kinds)).zero_blocks_vanish()
        assert k.twig_counts == r.twig_counts and k.link_counts == r.link_counts
        drops = {kron_matrix(A, k.tree, drop_row=d).tobytes() for d in range(g.n)}
        assert len(drops) == 1


def test_random_corpus_cycle_oracle(corpus):
    for g in corpus[:100]:
        nt = normal_tree_kruskal(g)
        cycles, cutsets = brute_cycles_cutsets(g, nt.tree)
        sets = fundamental_sets(nt.tree, nt.F, nt.cotree)
        assert all(sorted(sets.cycles[l]) == cycles[l] for l in nt.cotree)
        assert all(sorted(sets.cutsets[t]) == cutsets[t] for t in nt.tree)


def test_tellegen_floats(corpus):
    rng = np.random.default_rng(3)
    for g in corpus[:100]:
        nt = normal_tree_kruskal(g)
        F = nt.F.astype(float)
        iN, vT = rng.normal(size=len(nt.cotree)), rng.normal(size=len(nt.tree))
        i = np.zeros(g.b)
        v = np.zeros(g.b)
        i[list(nt.cotree)], i[list(nt.tree)] = iN, F.T @ iN
        v[list(nt.tree)], v[list(nt.cotree)] = vT, -F @ vT
        assert abs(i @ v) <= 1e-12 * (1 + np.abs(i).sum() * np.abs(v).max())
