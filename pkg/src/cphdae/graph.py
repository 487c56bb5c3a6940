"""Circuit graph, incidence matrix, solvability checks, normal trees,
Kron matrix and fundamental cycles/cutsets.

Edges and vertices are 0-based in code: edge k is the k-th netlist line,
vertex ``v`` of the file becomes row ``v - 1`` of the incidence matrix.

The Kron matrix ``F`` (links x twigs) expresses every cotree column of the
incidence matrix in the tree columns, ``A_N = -A_T F^T``. Equivalently
``i_T = F^T i_N`` (KCL) and ``v_N = -F v_T`` (KVL).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (CurrentCutset, DisconnectedGraph, NotATree, NotNormal,
                     VoltageCycle)
from .linalg import rank, rref_exact
from .netlist import CircuitSpec

# scan order used by both tree builders: sources, storage, dissipation, inductors, current sources
CLASS_ORDER = ("V", "C", "D", "L", "I")


def edge_class(kind: str) -> str:
    return "D" if kind in ("R", "G") else kind


@dataclass(frozen=True)
class CircuitGraph:
    n: int
    edges: tuple[tuple[str, int, int], ...]  # (kind, from, to), vertices 0-based
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(f"e{k + 1}" for k in range(len(self.edges))))
        for kind, u, v in self.edges:
            if u == v:
                raise ValueError("self-loop in graph")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError("vertex out of range")

    @property
    def b(self) -> int:
        return len(self.edges)

    @property
    def kinds(self) -> list[str]:
        return [e[0] for e in self.edges]

    @classmethod
    def from_spec(cls, spec: CircuitSpec) -> "CircuitGraph":
        edges = tuple((e.kind, e.from_node - 1, e.to_node - 1) for e in spec.elements)
        return cls(spec.n, edges, tuple(spec.names))

    def edge_indices(self, names: Sequence[str]) -> list[int]:
        lookup = {nm: k for k, nm in enumerate(self.names)}
        try:
            return [lookup[nm] for nm in names]
        except KeyError as exc:
            raise NotATree(f"unknown edge name {exc.args[0]!r}") from None

    def class_sorted(self) -> list[int]:
        """Edge indices ordered by class V, C, D, L, I; file order within a class."""
        rank_of = {c: k for k, c in enumerate(CLASS_ORDER)}
        return sorted(range(self.b), key=lambda k: (rank_of[edge_class(self.edges[k][0])], k))


def incidence(g: CircuitGraph) -> np.ndarray:
    A = np.zeros((g.n, g.b), dtype=np.int64)
    for k, (_, u, v) in enumerate(g.edges):
        A[u, k] = 1
        A[v, k] = -1
    return A


# ---------------------------------------------------------------------------
# well-posedness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WellposedReport:
    a1_ok: bool
    a2_ok: bool
    connected: bool
    ranks: tuple[int, int, int, int]

    @property
    def ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.connected


def _cols(A: np.ndarray, kinds: Sequence[str], classes: str) -> np.ndarray:
    sel = [k for k, kd in enumerate(kinds) if edge_class(kd) in classes]
    return A[:, sel]


def cumulative_ranks(A: np.ndarray, kinds: Sequence[str]) -> tuple[int, int, int, int]:
    """(r_V, r_VC, r_VCD, r_VCDL)."""
    return tuple(rank(_cols(A, kinds, cls)) for cls in ("V", "VC", "VCD", "VCDL"))  # type: ignore[return-value]


def check_wellposed(A: np.ndarray, kinds: Sequence[str], strict: bool = True) -> WellposedReport:
    n = A.shape[0]
    n_V = sum(1 for kd in kinds if kd == "V")
    ranks = cumulative_ranks(A, kinds)
    connected = rank(A) == n - 1
    a1 = ranks[0] == n_V
    a2 = ranks[3] == n - 1
    if strict:
        if not connected:
            raise DisconnectedGraph("incidence matrix has rank below n-1")
        if not a1:
            raise VoltageCycle("voltage sources form a cycle")
        if not a2:
            raise CurrentCutset("current sources form a cutset")
    return WellposedReport(a1, a2, connected, ranks)


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalTree:
    tree: tuple[int, ...]
    cotree: tuple[int, ...]
    F: np.ndarray = field(repr=False)
    ranks: tuple[int, int, int, int]
    twig_counts: tuple[int, int, int, int]   # (n_v, n_c, n_d, n_l)
    link_counts: tuple[int, int, int, int]   # (n_C, n_D, n_L, n_I)
    normal: bool = True

    def F_entry(self, link: int, twig: int) -> int:
        return int(self.F[self.cotree.index(link), self.tree.index(twig)])


def _counts(kinds: Sequence[str], idx: Sequence[int], classes: str) -> tuple[int, ...]:
    cls = [edge_class(kinds[k]) for k in idx]
    return tuple(cls.count(c) for c in classes)


def kruskal_tree(g: CircuitGraph) -> list[int]:
    """Scan edges in class order with union-find; return the tree (sorted)."""
    parent = list(range(g.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = []
    for k in g.class_sorted():
        _, u, v = g.edges[k]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append(k)
            if len(tree) == g.n - 1:
                break
    return sorted(tree)


def kron_matrix(A: np.ndarray, tree: Sequence[int], drop_row: int = -1) -> np.ndarray:
    """F = -(At_T^{-1} At_N)^T with one row of A removed, in exact integers.

    Rows of F follow the cotree in ascending edge order, columns the tree
    in the order given.
    """
    n, b = A.shape
    tree = list(tree)
    if len(tree) != n - 1 or len(set(tree)) != len(tree):
        raise NotATree(f"a spanning tree needs {n - 1} distinct edges, got {len(tree)}")
    cotree = [k for k in range(b) if k not in set(tree)]
    At = np.delete(A, drop_row % n, axis=0)
    R, piv = rref_exact(np.hstack([At[:, tree], At[:, cotree]]))
    if piv[: n - 1] != list(range(n - 1)):
        raise NotATree("tree columns are linearly dependent")
    X = R[: n - 1, n - 1:]
    return -X.T.copy()


def _make_tree(g: CircuitGraph, A: np.ndarray, tree: Sequence[int], F: np.ndarray | None,
               ranks: tuple[int, int, int, int]) -> NormalTree:
    tree = tuple(sorted(tree))
    cotree = tuple(k for k in range(g.b) if k not in set(tree))
    if F is None:
        F = kron_matrix(A, tree)
    twig = _counts(g.kinds, tree, "VCDL")
    link = _counts(g.kinds, cotree, "CDLI")
    n_I_tree = _counts(g.kinds, tree, "I")[0]
    expected = (ranks[0], ranks[1] - ranks[0], ranks[2] - ranks[1], ranks[3] - ranks[2])
    n_V = g.kinds.count("V")
    normal = twig == expected and n_I_tree == 0 and twig[0] == n_V
    return NormalTree(tree, cotree, np.asarray(F, dtype=np.int64), ranks, twig, link, normal)  # type: ignore[arg-type]


def normal_tree_kruskal(g: CircuitGraph) -> NormalTree:
    A = incidence(g)
    rep = check_wellposed(A, g.kinds)
    return _make_tree(g, A, kruskal_tree(g), None, rep.ranks)


def rref_tree(g: CircuitGraph, A: np.ndarray | None = None) -> tuple[list[int], np.ndarray]:
    """Tree from the pivot columns of RREF(A) with class-ordered columns and
    F read off the non-pivot columns. Returned F uses ascending edge order."""
    A = incidence(g) if A is None else A
    order = g.class_sorted()
    R, piv = rref_exact(A[:, order])
    n = g.n
    if len(piv) != n - 1:
        raise DisconnectedGraph("incidence matrix has rank below n-1")
    nonpiv = [k for k in range(g.b) if k not in set(piv)]
    F_perm = -R[: n - 1, nonpiv].T           # rows: links in scan order, cols: twigs in pivot order
    twigs = [order[k] for k in piv]
    links = [order[k] for k in nonpiv]
    tree = sorted(twigs)
    cotree = sorted(links)
    F = np.zeros((len(cotree), len(tree)), dtype=np.int64)
    row_of = {e: r for r, e in enumerate(cotree)}
    col_of = {e: c for c, e in enumerate(tree)}
    for a, link in enumerate(links):
        for bb, twig in enumerate(twigs):
            F[row_of[link], col_of[twig]] = F_perm[a, bb]
    return tree, F


def normal_tree_rref(g: CircuitGraph) -> NormalTree:
    A = incidence(g)
    rep = check_wellposed(A, g.kinds)
    tree, F = rref_tree(g, A)
    return _make_tree(g, A, tree, F, rep.ranks)


def validate_tree(g: CircuitGraph, tree: Sequence[int | str], require_normal: bool = True) -> NormalTree:
    """Accept a user-proposed tree after checking it spans and (optionally) is normal."""
    idx = [t if isinstance(t, (int, np.integer)) else g.edge_indices([t])[0] for t in tree]
    idx = [int(k) for k in idx]
    A = incidence(g)
    rep = check_wellposed(A, g.kinds)
    if any(not 0 <= k < g.b for k in idx):
        raise NotATree("edge index out of range")
    F = kron_matrix(A, sorted(idx))
    nt = _make_tree(g, A, idx, F, rep.ranks)
    if require_normal and not nt.normal:
        raise NotNormal(
            f"twig counts (v,c,d,l)={nt.twig_counts} differ from rank increments "
            f"{(rep.ranks[0], rep.ranks[1] - rep.ranks[0], rep.ranks[2] - rep.ranks[1], rep.ranks[3] - rep.ranks[2])}"
            " or a current source is a twig")
    return nt


# ---------------------------------------------------------------------------
# fundamental cycles and cutsets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutCycleSets:
    # link -> [(edge, sign)], sign +1 if the edge runs the same way round the cycle as the link
    cycles: dict[int, list[tuple[int, int]]]
    # twig -> [(edge, sign)], sign +1 if the edge crosses the cut in the same direction as the twig
    cutsets: dict[int, list[tuple[int, int]]]


def fundamental_sets(tree: Sequence[int], F: np.ndarray, cotree: Sequence[int] | None = None) -> CutCycleSets:
    tree = list(tree)
    if cotree is None:
        b = len(tree) + F.shape[0]
        cotree = [k for k in range(b) if k not in set(tree)]
    cycles = {}
    for r, link in enumerate(cotree):
        cycles[link] = [(link, 1)] + [(tree[s], int(F[r, s])) for s in range(len(tree)) if F[r, s] != 0]
    cutsets = {}
    for s, twig in enumerate(tree):
        cutsets[twig] = [(twig, 1)] + [(cotree[r], -int(F[r, s])) for r in range(len(cotree)) if F[r, s] != 0]
    return CutCycleSets(cycles, cutsets)

