import numpy as np
import pytest

from cphdae import circuits
from cphdae.dae import build_model1, build_model2
from cphdae.errors import DimensionMismatch
from cphdae.graph import normal_tree_kruskal
from cphdae.model import CircuitModel
from cphdae.solver import consistent_point
from cphdae.validation import oracle_model_equivalence
from util import REFERENCE_TREE, random_corpus, running_system, system_of

C = 5e-6
L = 0.1


def _sources(t):
    return 10 * t * np.sin(200 * np.pi * t), 10 * np.sin(10 * t)


def _hand_rows(t, x, xd):
    """The six running-example equations written out by hand, in the
    layout's row order (link rows first, twig R current law before link G
    voltage law)."""
    qC2, qC1, pL1, pL2, iR, vG = x
    dqC2, dqC1, dpL1, dpL2 = xd[:4]
    V, I = _sources(t)
    return np.array([
        qC2 / C - qC1 / C + V,
        dqC1 + dqC2 - pL2 / L + I,
        pL1 / L - pL2 / L + I,
        dpL2 + qC1 / C + iR + dpL1 - V,
        iR - vG - pL2 / L,
        vG + iR - V,
    ])


@pytest.fixture(scope="module")
def sys2():
    return running_system()


def test_layout(sys2):
    assert sys2.layout.names == ("q_C2", "q_C1", "phi_L1", "phi_L2", "i_R", "v_G")
    assert sys2.row_roles == ("C", "c", "l", "L", "d", "D")
    assert sys2.output_names == ("i_V", "v_I")


def test_residual_matches_hand_equations(sys2):
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = rng.uniform(0, 0.2)
        x, xd = rng.normal(size=6), rng.normal(size=6)
        assert np.allclose(sys2.residual(t, x, xd), _hand_rows(t, x, xd), rtol=1e-14, atol=1e-9)


def test_residual_at_zero_state(sys2):
    z = np.zeros(6)
    assert not sys2.residual(0.0, z, z).any()
    t = 0.01
    V, I = _sources(t)
    assert np.allclose(sys2.residual(t, z, z), [V, I, I, -V, 0, -V])


def test_output_running_example(sys2):
    rng = np.random.default_rng(2)
    x, xd = rng.normal(size=6), rng.normal(size=6)
    y = sys2.output(0.05, x, xd).y
    qC2, qC1, pL1, pL2, iR, vG = x
    assert np.allclose(y, [xd[0] - vG - pL2 / L, qC1 / C + xd[2]], rtol=1e-14)


def test_single_loop_sizes_and_output():
    s = system_of(circuits.vr_loop())
    assert s.N == 1 and s.row_roles == ("D",)
    assert s.output(0.0, [2.0], [0.0]).y.tolist() == [-2.0]
    s = system_of(circuits.lc_loop())
    assert s.N == 2 and s.output(0.0, [1, 1], [0, 0]).y.size == 0


def test_rc_exact_solution():
    s = system_of(circuits.rc_loop())
    for t in np.linspace(0, 2, 11):
        e = np.exp(-t)
        assert np.abs(s.residual(t, [e, -e], [-e, e])).max() <= 1e-12


def test_dimension_mismatch(sys2):
    with pytest.raises(DimensionMismatch):
        sys2.residual(0.0, np.zeros(5), np.zeros(6))


def test_model1_running_example():
    s1 = running_system(kind=1)
    assert s1.N == 8
    assert len(s1.output_names) == 2          # 8 DAE rows plus 2 outputs
    assert set(s1.layout.names) >= {"v_R", "i_G", "i_R", "v_G"}
    m = CircuitModel.from_spec(circuits.running_example())
    from cphdae.graph import validate_tree
    rep = oracle_model_equivalence(m, validate_tree(m.graph, REFERENCE_TREE), points=100)
    assert rep.passed, rep.line()


def test_model1_equals_model2_without_dissipators():
    spec = circuits.lc_loop()
    m = CircuitModel.from_spec(spec)
    nt = normal_tree_kruskal(m.graph)
    s1, s2 = build_model1(m, nt), build_model2(m, nt)
    assert s1.layout.names == s2.layout.names
    x, xd = np.array([0.3, -0.2]), np.array([1.0, 2.0])
    assert (s1.residual(0.1, x, xd) == s2.residual(0.1, x, xd)).all()


def _pattern_sound(s, rng, samples=3):
    for _ in range(samples):
        t = rng.uniform(0, 1)
        x, xd = rng.uniform(-0.5, 0.5, s.N), rng.uniform(-0.5, 0.5, s.N)
        f0 = s.residual(t, x, xd)
        for j in range(s.N):
            for order in (0, 1):
                x2, xd2 = x.copy(), xd.copy()
                (x2 if order == 0 else xd2)[j] += 0.37
                f = s.residual(t, x2, xd2)
                for r in range(s.N):
                    if (j, order) not in s.occurrences(r) and f[r] != f0[r]:
                        return False
    return True


def test_occurrence_pattern_soundness():
    rng = np.random.default_rng(5)
    systems = [running_system(), running_system(kind=1), system_of(circuits.diode_clipper())]
    systems += [system_of(spec, kind) for spec in random_corpus(30, seed0=11) for kind in (1, 2)]
    assert all(_pattern_sound(s, rng) for s in systems)


def test_derivatives_only_in_storage_rows():
    for spec in random_corpus(30, seed0=21):
        s = system_of(spec)
        P1 = s.pattern[1]
        for r, role in enumerate(s.row_roles):
            cols = {s.layout.roles[j] for j in np.nonzero(P1[r])[0]}
            if role == "c":
                assert cols <= {"C", "c"}
            elif role == "L":
                assert cols <= {"l", "L"}
            else:
                assert not cols


def test_residual_rows_are_kirchhoff_defects():
    """At arbitrary points each twig row is the cutset current sum and each
    link row the cycle voltage sum of the reconstructed branch vectors."""
    rng = np.random.default_rng(8)
    for spec in random_corpus(40, seed0=31):
        s = system_of(spec)
        x, xd = rng.normal(size=s.N), rng.normal(size=s.N)
        i, v = s.branch_quantities(0.3, x, xd)
        f = s.residual(0.3, x, xd)
        F = s.tree.F.astype(float)
        names = s.model.graph.names
        for r, nm in enumerate(s.row_names):
            e = names.index(nm[2:])
            if e in s.tree.tree:
                c = s.tree.tree.index(e)
                defect = i[e] - F[:, c] @ i[list(s.tree.cotree)]
            else:
                defect = v[e] + F[s.tree.cotree.index(e)] @ v[list(s.tree.tree)]
            assert defect == pytest.approx(f[r], rel=1e-12, abs=1e-12 * (1 + np.abs(i).max() + np.abs(v).max()))


def test_power_balance_at_consistent_points():
    for spec in [circuits.running_example(), circuits.diode_clipper()] + random_corpus(20, seed0=41):
        s = system_of(spec)
        cp = consistent_point(s, 0.1, guess=0.5)
        i, v = s.branch_quantities(0.1, cp.x0, cp.xdot0)
        F = s.tree.F.astype(float)
        T, N = list(s.tree.tree), list(s.tree.cotree)
        scale = 1 + np.abs(i).max() + np.abs(v).max()
        assert np.allclose(i[T], F.T @ i[N], atol=1e-9 * scale)
        assert np.allclose(v[N], -F @ v[T], atol=1e-9 * scale)
        pt = s.power_terms(0.1, cp.x0, cp.xdot0)
        assert abs(pt["balance"]) <= 1e-9 * scale**2
        assert abs(float(i @ v)) <= 1e-9 * scale**2
