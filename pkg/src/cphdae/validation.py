"""Independent oracles binding the main code paths to brute-force checks.

Each oracle returns an :class:`OracleReport`; none of them reuse the code
path it is checking (own path search, own substitution, own rank tests).
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import CircuitGraph, NormalTree, fundamental_sets, incidence, kruskal_tree, rref_tree


@dataclass(frozen=True)
class OracleReport:
    check: str
    invariant: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.check} ({self.invariant}): measured={self.measured:.3g} tol={self.tolerance:.3g} {self.detail}".rstrip()


# ---------------------------------------------------------------------------
# fundamental cycles and cutsets by path search
# ---------------------------------------------------------------------------

def tree_path(g: CircuitGraph, tree: Sequence[int], start: int, goal: int) -> list[tuple[int, int]]:
    """Edges of the tree path start -> goal with +1 when traversed along the
    edge orientation, by breadth-first search."""
    adj: dict[int, list[tuple[int, int, int]]] = {v: [] for v in range(g.n)}
    for e in tree:
        _, u, v = g.edges[e]
        adj[u].append((v, e, 1))
        adj[v].append((u, e, -1))
    prev: dict[int, tuple[int, int, int] | None] = {start: None}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        if a == goal:
            break
        for nb, e, s in adj[a]:
            if nb not in prev:
                prev[nb] = (a, e, s)
                queue.append(nb)
    if goal not in prev:
        raise ValueError("tree does not connect the two vertices")
    path = []
    node = goal
    while prev[node] is not None:
        a, e, s = prev[node]
        path.append((e, s))
        node = a
    return path[::-1]


def _side(g: CircuitGraph, tree: Sequence[int], removed: int, root: int) -> set[int]:
    adj: dict[int, list[int]] = {v: [] for v in range(g.n)}
    for e in tree:
        if e == removed:
            continue
        _, u, v = g.edges[e]
        adj[u].append(v)
        adj[v].append(u)
    seen = {root}
    stack = [root]
    while stack:
        a = stack.pop()
        for nb in adj[a]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen


def brute_cycles_cutsets(g: CircuitGraph, tree: Sequence[int]):
    tree = sorted(tree)
    cotree = [k for k in range(g.b) if k not in set(tree)]
    cycles = {}
    for l in cotree:
        _, u, v = g.edges[l]
        # around the cycle: along the link u -> v, then back v -> u in the tree
        cycles[l] = sorted([(l, 1)] + tree_path(g, tree, v, u))
    cutsets = {}
    for t in tree:
        _, u, _ = g.edges[t]
        S = _side(g, tree, t, u)
        members = []
        for e in range(g.b):
            _, a, bb = g.edges[e]
            if (a in S) != (bb in S):
                members.append((e, 1 if a in S else -1))
        cutsets[t] = sorted(members)
    return cycles, cutsets


def oracle_cycle_cutset(g: CircuitGraph, nt: NormalTree) -> OracleReport:
    cycles, cutsets = brute_cycles_cutsets(g, nt.tree)
    sets = fundamental_sets(nt.tree, nt.F, nt.cotree)
    bad = 0
    for l in nt.cotree:
        bad += sorted(sets.cycles[l]) != cycles[l]
    for t in nt.tree:
        bad += sorted(sets.cutsets[t]) != cutsets[t]
    entries = nt.F.size
    return OracleReport("cycle/cutset vs F", "F-nonzeros", bad == 0, float(bad), 0.0,
                        f"{entries} entries, {len(nt.cotree)} cycles, {len(nt.tree)} cutsets")


# ---------------------------------------------------------------------------
# Tellegen orthogonality in exact integers
# ---------------------------------------------------------------------------

def oracle_tellegen(nt: NormalTree, b: int, samples: int = 20, seed: int = 0) -> OracleReport:
    """Integer link currents and twig voltages, completed by KCL/KVL through F,
    must give i.v = 0 exactly."""
    rng = np.random.default_rng(seed)
    F = np.asarray(nt.F, dtype=object)
    worst = 0
    for _ in range(samples):
        iN = rng.integers(-50, 51, size=len(nt.cotree)).astype(object)
        vT = rng.integers(-50, 51, size=len(nt.tree)).astype(object)
        iT = F.T.dot(iN) if len(nt.cotree) else np.zeros(len(nt.tree), dtype=object)
        vN = -F.dot(vT) if len(nt.tree) else np.zeros(len(nt.cotree), dtype=object)
        i = np.zeros(b, dtype=object)
        v = np.zeros(b, dtype=object)
        i[list(nt.tree)] = iT
        i[list(nt.cotree)] = iN
        v[list(nt.tree)] = vT
        v[list(nt.cotree)] = vN
        worst = max(worst, abs(int(i.dot(v))))
    return OracleReport("Tellegen i.v = 0", "Kirchhoff-orthogonality", worst == 0, float(worst), 0.0,
                        f"{samples} integer samples")


def kirchhoff_consistent(g: CircuitGraph, nt: NormalTree, seed: int = 0) -> bool:
    """A i = 0 and v = A^T eta for the completed vectors (exact integers)."""
    rng = np.random.default_rng(seed)
    A = incidence(g).astype(object)
    F = np.asarray(nt.F, dtype=object)
    iN = rng.integers(-9, 10, size=len(nt.cotree)).astype(object)
    i = np.zeros(g.b, dtype=object)
    i[list(nt.cotree)] = iN
    i[list(nt.tree)] = F.T.dot(iN) if len(nt.cotree) else 0
    if any(A.dot(i)):
        return False
    eta = rng.integers(-9, 10, size=g.n).astype(object)
    v = A.T.dot(eta)
    vT = v[list(nt.tree)]
    return bool(np.all(v[list(nt.cotree)] == -F.dot(vT))) if len(nt.cotree) else True


# ---------------------------------------------------------------------------
# Model 1 / Model 2 equivalence by substitution
# ---------------------------------------------------------------------------

def oracle_model_equivalence(model, tree: NormalTree, points: int = 100, seed: int = 0,
                             tol: float = 1e-12) -> OracleReport:
    """Model 1 residual at the substituted point equals Model 2 residual row
    by row, and the relation rows vanish."""
    from .dae import build_model1, build_model2
    s1 = build_model1(model, tree)
    s2 = build_model2(model, tree)
    rng = np.random.default_rng(seed)
    d = model.diss
    dis_edges = list(model.dissipators)
    names = model.graph.names
    worst = 0.0
    for _ in range(points):
        t = float(rng.uniform(-1, 1))
        x2 = rng.uniform(-1, 1, s2.N)
        xd2 = rng.uniform(-1, 1, s2.N)
        xh = np.array([x2[s2.layout.index(f"{d.control[k]}_{names[e]}")] for k, e in enumerate(dis_edges)])
        rho = d.rho(xh) if len(dis_edges) else np.zeros(0)
        cc = np.array([c == "i" for c in d.control], bool)
        i_D = np.where(cc, xh, rho)
        v_D = np.where(cc, rho, xh)
        x1 = np.zeros(s1.N)
        xd1 = rng.uniform(-1, 1, s1.N)
        for j, nm in enumerate(s1.layout.names):
            q, e = nm.split("_", 1)
            if q in ("i", "v"):
                k = dis_edges.index(names.index(e))
                x1[j] = i_D[k] if q == "i" else v_D[k]
            else:
                j2 = s2.layout.index(nm)
                x1[j] = x2[j2]
                xd1[j] = xd2[j2]
        f1 = s1.residual(t, x1, xd1)
        f2 = s2.residual(t, x2, xd2)
        for r, nm in enumerate(s1.row_names):
            if nm.startswith("r_"):
                err = abs(f1[r])
            else:
                err = abs(f1[r] - f2[s2.row_names.index(nm)])
            worst = max(worst, err / (1.0 + abs(f1[r])))
    return OracleReport("Model 1 = Model 2 by substitution", "mixed-form elimination", worst <= tol,
                        worst, tol, f"{points} points")


# ---------------------------------------------------------------------------
# index by rank tests
# ---------------------------------------------------------------------------

def _rank(M: np.ndarray, rtol: float = 1e-10) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > rtol * max(s[0], 1e-300)))


def measured_index(sys, t: float, x, xd) -> int:
    """0 if df/dxdot is nonsingular; 1 if the once-differentiated
    derivative-free rows complete it to a nonsingular matrix; else -1."""
    N = sys.N
    Jx, Jxd = sys.jacobians(t, x, xd)
    if _rank(Jxd) == N:
        return 0
    nodiff = [r for r in range(N) if not np.any(Jxd[r])]
    J = Jxd.copy()
    J[nodiff] = Jx[nodiff]
    return 1 if _rank(J) == N else -1


def oracle_index(sys, sample=None) -> OracleReport:
    from .sigma import analyze
    if sample is None:
        from .solver import consistent_point
        cp = consistent_point(sys, 0.0)
        sample = (cp.t0, cp.x0, cp.xdot0)
    got = measured_index(sys, *sample)
    sa = analyze(sys, sample)
    ok = got == sa.structural_index and sa.amenable
    return OracleReport("index by rank test", "index <= 1", ok, float(got), float(sa.structural_index),
                        f"structural index {sa.structural_index}")


# ---------------------------------------------------------------------------
# tree-algorithm scaling
# ---------------------------------------------------------------------------

def tree_scaling(sizes: Sequence[int] = (50, 100, 200, 400), seed: int = 0, repeats: int = 3) -> dict:
    """Wall time of Kruskal and RREF tree construction on random connected
    graphs with b = 3n edges. Returns times and fitted log-log slopes."""
    rng = np.random.default_rng(seed)
    tk, tr = [], []
    for n in sizes:
        edges = []
        for v in range(1, n):
            edges.append(("C", int(rng.integers(0, v)), v))
        while len(edges) < 3 * n:
            u, v = rng.choice(n, 2, replace=False)
            edges.append((str(rng.choice(["V", "C", "R", "L"], p=[0.02, 0.38, 0.3, 0.3])), int(u), int(v)))
        g = CircuitGraph(n, tuple(edges))
        A = incidence(g)
        best_k = best_r = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            kruskal_tree(g)
            best_k = min(best_k, time.perf_counter() - t0)
            t0 = time.perf_counter()
            rref_tree(g, A)
            best_r = min(best_r, time.perf_counter() - t0)
        tk.append(best_k)
        tr.append(best_r)
    ln = np.log(np.asarray(sizes, float))
    slope_k = float(np.polyfit(ln, np.log(tk), 1)[0])
    slope_r = float(np.polyfit(ln, np.log(tr), 1)[0])
    return {"sizes": list(sizes), "kruskal": tk, "rref": tr, "slope_kruskal": slope_k, "slope_rref": slope_r}
