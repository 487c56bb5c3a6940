import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cphdae import circuits
from cphdae.dae import build_model2
from cphdae.errors import StructurallyIllPosed
from cphdae.graph import validate_tree
from cphdae.sigma import (Offsets, analyze, canonical_offsets, hvt, jacobian_from_offsets, offsets_valid,
                          provisional_offsets, signature_matrix, system_jacobian)
from cphdae.solver import consistent_point
from util import model_of, random_corpus, running_system, system_of

NI = -np.inf
# Rows f_C2, f_C1, f_L1, f_L2, then the twig-R current law and the link-G voltage law.
SIGMA_RUNNING = np.array([
    [0, 0, NI, NI, NI, NI],
    [1, 1, NI, 0, NI, NI],
    [NI, NI, 0, 0, NI, NI],
    [NI, 0, 1, 1, 0, NI],
    [NI, NI, NI, 0, 0, 0],
    [NI, NI, NI, NI, 0, 0],
])


@pytest.fixture(scope="module")
def sys2():
    return running_system()


def test_signature_running_example(sys2):
    S = signature_matrix(sys2)
    assert np.array_equal(S, SIGMA_RUNNING)
    perm, val = hvt(S)
    assert val == 2


def test_signature_rc_loop():
    s = system_of(circuits.rc_loop())
    assert s.layout.names == ("q_C", "i_R")
    # reversing rows and columns gives the (x1 = i_R, x2 = q_C) ordering
    assert np.array_equal(signature_matrix(s)[::-1, ::-1], [[0, 0], [0, 1]])


def test_storage_only_circuit_has_no_dissipator_columns():
    s = system_of(circuits.lc_loop())
    assert set(s.layout.roles) <= {"C", "c", "l", "L"}
    assert signature_matrix(s).shape == (2, 2)


def test_hvt_examples():
    S = np.array([[0, NI], [NI, 3]])
    perm, val = hvt(S)
    assert perm.tolist() == [0, 1] and val == 3
    with pytest.raises(StructurallyIllPosed):
        hvt(np.array([[NI, NI], [0, 0]]))


def _brute_hvt(S):
    N = S.shape[0]
    best = -np.inf
    for p in itertools.permutations(range(N)):
        best = max(best, sum(S[i, p[i]] for i in range(N)))
    return best


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_hvt_optimal_and_offsets_valid(N, seed):
    rng = np.random.default_rng(seed)
    S = np.where(rng.random((N, N)) < 0.5, rng.integers(0, 3, (N, N)).astype(float), NI)
    S[np.arange(N), rng.permutation(N)] = rng.integers(0, 3, N)      # ensure a finite transversal
    perm, val = hvt(S)
    assert val == _brute_hvt(S)
    off = canonical_offsets(S, perm)
    assert offsets_valid(S, off, val)
    assert (off.d[perm] - off.c == S[np.arange(N), perm]).all()
    assert off.value() == val


def test_canonical_offsets_examples(sys2):
    S = signature_matrix(sys2)
    perm, _ = hvt(S)
    off = canonical_offsets(S, perm)
    assert off.c.tolist() == [1, 0, 1, 0, 0, 0]
    assert off.d.tolist() == [1, 1, 1, 1, 0, 0]
    z = np.zeros((3, 3))
    off = canonical_offsets(z, hvt(z)[0])
    assert not off.c.any() and not off.d.any()
    S = np.array([[0, 0], [0, 1]], float)
    off = canonical_offsets(S, hvt(S)[0])
    assert off.c.tolist() == [0, 0] and off.d.tolist() == [0, 1]


def test_provisional_offsets(sys2):
    off = provisional_offsets(sys2)
    assert off.c.tolist() == [1, 0, 1, 0, 1, 1] and off.d.tolist() == [1] * 6
    assert off.structural_index == 1 and off.value() == 2
    s1 = running_system(kind=1)
    off1 = provisional_offsets(s1)
    r = s1.rows("r")
    assert len(r) == 2 and (off1.c[r] == 1).all()


def test_rc_jacobian_by_hand():
    s = system_of(circuits.rc_loop())
    S = signature_matrix(s)
    off = canonical_offsets(S, hvt(S)[0])
    J = system_jacobian(s, off, 0.0, [1.0, -1.0], [-1.0, 1.0])
    # entries exist only where d_j - c_i equals sigma_ij, so the q_C column
    # of the algebraic row drops out
    assert J.tolist() == [[1.0, -1.0], [0.0, 1.0]]
    assert np.linalg.det(J) == pytest.approx(1.0)


def test_running_example_verdict(sys2):
    sa = analyze(sys2)
    assert sa.amenable and sa.dof == 2 and sa.structural_index == 1
    assert sa.sv_ratio > 1e-9
    assert sa.canonical_index == 2
    # block lower triangular: no coupling from storage-row blocks to later variable blocks
    J = sa.J
    blocks = [slice(0, 2), slice(2, 4), slice(4, 6)]
    for a in range(3):
        for b in range(a + 1, 3):
            assert not J[blocks[a], blocks[b]].any()
        assert np.linalg.matrix_rank(J[blocks[a], blocks[a]]) == 2


def test_small_loop_verdicts():
    lc = analyze(system_of(circuits.lc_loop()))
    assert lc.amenable and lc.dof == 2 and lc.structural_index == 0
    vr = analyze(system_of(circuits.vr_loop()))
    assert vr.amenable and vr.dof == 0 and vr.structural_index == 1


def test_non_normal_tree_is_unamenable():
    m = model_of(circuits.running_example())
    nt = validate_tree(m.graph, ["V", "R", "L1", "L2"], require_normal=False)
    s = build_model2(m, nt, require_normal=False)
    sa = analyze(s, (0.0, np.ones(s.N), np.ones(s.N)))
    assert not sa.amenable and sa.sv_ratio < 1e-9


def test_random_passive_circuits_are_amenable():
    """Provisional J nonsingular with nonsingular diagonal blocks; the
    derivative-free rows have full row rank at the consistent point."""
    for spec in random_corpus(40, seed0=51):
        s = system_of(spec)
        if s.N == 0:
            continue
        cp = consistent_point(s, 0.0, guess=0.3)
        sa = analyze(s, (cp.t0, cp.x0, cp.xdot0))
        assert sa.amenable
        assert offsets_valid(sa.sigma, sa.offsets, sa.val)
        assert offsets_valid(sa.sigma, sa.canonical, sa.val)
        assert sa.val == sa.offsets.value() == sa.canonical.value()
        for roles in (("C", "c"), ("l", "L"), ("d", "D")):
            r, c = s.rows(*roles), s.vars(*roles)
            if len(r):
                assert np.linalg.matrix_rank(sa.J[np.ix_(r, c)]) == len(r)
        Jx, _ = s.jacobians(cp.t0, cp.x0, cp.xdot0)
        alg = s.rows("C", "l", "d", "D")
        if len(alg):
            assert np.linalg.matrix_rank(Jx[alg]) == len(alg)
