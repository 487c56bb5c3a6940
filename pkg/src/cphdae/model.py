"""Circuit semantics on top of the graph: edge classes, blocks of F, energy
storage laws, dissipator laws in mixed (current- or voltage-controlled)
form, passivity checks and node-identification composition.

Sign convention: every edge carries its current from ``from`` to ``to`` and
its voltage is ``potential(from) - potential(to)``, so ``i*v`` is the power
absorbed by the element.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, JoinError, NotNormal
from .expr import compile_expr, diff_expr
from .graph import CircuitGraph, NormalTree, edge_class
from .linalg import is_pd, is_pdmp
from .netlist import CircuitSpec, Constant, ElementSpec, validate_circuit

Vector = np.ndarray
ScalarFn = Callable[[float], float]


# ---------------------------------------------------------------------------
# edge classes
# ---------------------------------------------------------------------------

SPLIT_CLASSES = ("v", "c", "d", "l", "C", "D", "L", "I")


@dataclass(frozen=True)
class EdgeSplit:
    v: tuple[int, ...]
    c: tuple[int, ...]
    d: tuple[int, ...]
    l: tuple[int, ...]  # noqa: E741
    C: tuple[int, ...]
    D: tuple[int, ...]
    L: tuple[int, ...]
    I: tuple[int, ...]  # noqa: E741

    def sizes(self) -> dict[str, int]:
        return {k: len(getattr(self, k)) for k in SPLIT_CLASSES}


def split_edges(tree: Sequence[int], kinds: Sequence[str]) -> EdgeSplit:
    tree_set = set(int(k) for k in tree)
    groups: dict[str, list[int]] = {k: [] for k in SPLIT_CLASSES}
    for e, kind in enumerate(kinds):
        cls = edge_class(kind)
        if e in tree_set:
            if cls == "I":
                raise NotNormal(f"current source edge {e} is a twig")
            groups[cls.lower()].append(e)
        else:
            if cls == "V":
                raise NotNormal(f"voltage source edge {e} is a link")
            groups[cls].append(e)
    return EdgeSplit(**{k: tuple(v) for k, v in groups.items()})


class BlockF:
    """Named sub-blocks ``F_Xy`` of the Kron matrix (link class X, twig class y)."""

    ZERO_BLOCKS = ("F_Cd", "F_Cl", "F_Dl")

    def __init__(self, nt: NormalTree, split: EdgeSplit):
        self.F = nt.F
        self.split = split
        self._row = {e: r for r, e in enumerate(nt.cotree)}
        self._col = {e: c for c, e in enumerate(nt.tree)}

    def block(self, links: str, twigs: str) -> np.ndarray:
        rows = [self._row[e] for e in getattr(self.split, links)]
        cols = [self._col[e] for e in getattr(self.split, twigs)]
        return self.F[np.ix_(rows, cols)]

    def __getattr__(self, name: str) -> np.ndarray:
        if name.startswith("F_") and len(name) == 4 and name[2] in "CDLI" and name[3] in "vcdl":
            return self.block(name[2], name[3])
        raise AttributeError(name)

    def reassemble(self) -> np.ndarray:
        """Rebuild F in (C, D, L, I) x (v, c, d, l) block order."""
        return np.block([[self.block(X, y) for y in "vcdl"] for X in "CDLI"])

    def zero_blocks_vanish(self) -> bool:
        return all(not np.any(getattr(self, nm)) for nm in self.ZERO_BLOCKS)


# ---------------------------------------------------------------------------
# scalar laws and quadrature
# ---------------------------------------------------------------------------

def adaptive_simpson(f: ScalarFn, a: float, b: float, rtol: float = 1e-10, max_depth: int = 60) -> float:
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(fa, fm, fb, a, b)
    scale = max(abs(whole), abs(b - a) * max(abs(fa), abs(fm), abs(fb)), 1e-300)
    tol = rtol * scale
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        delta = left + right - est
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
    return total


@dataclass(frozen=True)
class ScalarLaw:
    """y = f(x) for one element; ``slope`` is set for linear laws."""
    f: ScalarFn
    df: ScalarFn
    slope: float | None = None

    @classmethod
    def linear(cls, k: float) -> "ScalarLaw":
        k = float(k)
        return cls(lambda x: k * x, lambda x: k, k)

    @classmethod
    def from_element(cls, e: ElementSpec) -> "ScalarLaw":
        if isinstance(e.law, Constant):
            val = e.law.value
            if e.kind in ("C", "L"):
                if val == 0.0:
                    raise ValueError(f"{e.name}: zero capacitance/inductance")
                return cls.linear(1.0 / val)
            return cls.linear(val)
        return cls(compile_expr(e.law.ast), compile_expr(diff_expr(e.law.ast)))

    def integral(self, x: float) -> float:
        if self.slope is not None:
            return 0.5 * self.slope * x * x
        return adaptive_simpson(self.f, 0.0, float(x))


# ---------------------------------------------------------------------------
# storage
# ---------------------------------------------------------------------------

class Storage:
    """Gradient of one energy function (capacitor or inductor group)."""

    size: int

    def grad(self, x: Vector) -> Vector:
        raise NotImplementedError

    def hess(self, x: Vector) -> np.ndarray:
        raise NotImplementedError

    def energy(self, x: Vector) -> float:
        raise NotImplementedError

    def pattern(self) -> np.ndarray:
        raise NotImplementedError

    def linear_matrix(self) -> np.ndarray | None:
        return None


class IndependentStorage(Storage):
    def __init__(self, laws: Sequence[ScalarLaw]):
        self.laws = tuple(laws)
        self.size = len(self.laws)
        self._slopes = None
        if all(l.slope is not None for l in self.laws):
            self._slopes = np.array([l.slope for l in self.laws], dtype=float)

    def grad(self, x: Vector) -> Vector:
        if self._slopes is not None:
            return self._slopes * x
        return np.array([l.f(xi) for l, xi in zip(self.laws, x)], dtype=float)

    def hess(self, x: Vector) -> np.ndarray:
        if self._slopes is not None:
            return np.diag(self._slopes)
        return np.diag([l.df(xi) for l, xi in zip(self.laws, x)]).astype(float)

    def energy(self, x: Vector) -> float:
        return float(sum(l.integral(xi) for l, xi in zip(self.laws, x)))

    def pattern(self) -> np.ndarray:
        return np.eye(self.size, dtype=bool)

    def linear_matrix(self) -> np.ndarray | None:
        return None if self._slopes is None else np.diag(self._slopes)


class CoupledStorage(Storage):
    """Library-level coupled storage: gradient and Hessian callbacks over the
    whole group. Energy defaults to the line integral of the gradient along
    the ray from the origin."""

    def __init__(self, size: int, grad: Callable[[Vector], Vector], hess: Callable[[Vector], np.ndarray],
                 energy: Callable[[Vector], float] | None = None, pattern: np.ndarray | None = None,
                 linear: np.ndarray | None = None):
        self.size = size
        self._grad, self._hess, self._energy = grad, hess, energy
        self._pattern = np.ones((size, size), dtype=bool) if pattern is None else np.asarray(pattern, bool)
        self._linear = None if linear is None else np.asarray(linear, float)

    @classmethod
    def linear(cls, K: np.ndarray) -> "CoupledStorage":
        K = np.asarray(K, dtype=float)
        return cls(K.shape[0], lambda x: K @ x, lambda x: K, lambda x: 0.5 * float(x @ K @ x),
                   K != 0, K)

    def grad(self, x):
        return np.asarray(self._grad(np.asarray(x, float)), dtype=float)

    def hess(self, x):
        return np.asarray(self._hess(np.asarray(x, float)), dtype=float)

    def energy(self, x):
        x = np.asarray(x, float)
        if self._energy is not None:
            return float(self._energy(x))
        return adaptive_simpson(lambda s: float(self.grad(s * x) @ x), 0.0, 1.0)

    def pattern(self):
        return self._pattern

    def linear_matrix(self):
        return self._linear


# ---------------------------------------------------------------------------
# dissipators
# ---------------------------------------------------------------------------

class DissipatorForm:
    """Mixed form: the controlling quantity xhat_k is the current of an
    R-type edge or the voltage of a G-type edge; rho returns the other one."""

    size: int
    control: tuple[str, ...]  # 'i' (current-controlled) or 'v' per edge

    def rho(self, xh: Vector) -> Vector:
        raise NotImplementedError

    def jac(self, xh: Vector) -> np.ndarray:
        raise NotImplementedError

    def pattern(self) -> np.ndarray:
        raise NotImplementedError

    def linear_matrix(self) -> np.ndarray | None:
        return None

    @property
    def current_controlled(self) -> np.ndarray:
        return np.array([c == "i" for c in self.control], dtype=bool)

    def flip(self, xh: Vector, rh: Vector) -> tuple[Vector, Vector]:
        """(xhat, rho) -> (i_D, v_D)."""
        cc = self.current_controlled
        return np.where(cc, xh, rh), np.where(cc, rh, xh)

    def unflip(self, i: Vector, v: Vector) -> tuple[Vector, Vector]:
        """(i_D, v_D) -> (xhat, rho)."""
        cc = self.current_controlled
        return np.where(cc, i, v), np.where(cc, v, i)

    def eval(self, xh: Vector) -> tuple[Vector, Vector, np.ndarray]:
        xh = np.asarray(xh, dtype=float)
        i, v = self.flip(xh, self.rho(xh))
        return i, v, self.jac(xh)


class IndependentDissipator(DissipatorForm):
    def __init__(self, laws: Sequence[ScalarLaw], control: Sequence[str]):
        if len(laws) != len(control):
            raise DimensionMismatch("one control letter per law")
        self.laws = tuple(laws)
        self.control = tuple(control)
        self.size = len(self.laws)

    def rho(self, xh):
        return np.array([l.f(x) for l, x in zip(self.laws, xh)], dtype=float)

    def jac(self, xh):
        return np.diag([l.df(x) for l, x in zip(self.laws, xh)]).astype(float).reshape(self.size, self.size)

    def pattern(self):
        return np.eye(self.size, dtype=bool)

    def linear_matrix(self):
        if all(l.slope is not None for l in self.laws):
            return np.diag([l.slope for l in self.laws]).astype(float).reshape(self.size, self.size)
        return None


class CoupledDissipator(DissipatorForm):
    def __init__(self, control: Sequence[str], rho: Callable[[Vector], Vector],
                 jac: Callable[[Vector], np.ndarray], pattern: np.ndarray | None = None):
        self.control = tuple(control)
        self.size = len(self.control)
        self._rho, self._jac = rho, jac
        self._pattern = np.ones((self.size, self.size), bool) if pattern is None else np.asarray(pattern, bool)
        self._K: np.ndarray | None = None

    @classmethod
    def linear(cls, control: Sequence[str], K: np.ndarray) -> "CoupledDissipator":
        K = np.asarray(K, dtype=float)
        obj = cls(control, lambda x: K @ x, lambda x: K, K != 0)
        obj._K = K
        return obj

    def rho(self, xh):
        return np.asarray(self._rho(np.asarray(xh, float)), dtype=float)

    def jac(self, xh):
        return np.asarray(self._jac(np.asarray(xh, float)), dtype=float)

    def pattern(self):
        return self._pattern

    def linear_matrix(self):
        return self._K


@dataclass
class ImplicitRelation:
    """r(i_D, v_D) = 0 over the whole dissipator group, with both Jacobians."""
    size: int
    r: Callable[[Vector, Vector], Vector]
    dr_di: Callable[[Vector, Vector], np.ndarray]
    dr_dv: Callable[[Vector, Vector], np.ndarray]
    pattern_i: np.ndarray | None = None
    pattern_v: np.ndarray | None = None

    def __post_init__(self):
        full = np.ones((self.size, self.size), dtype=bool)
        if self.pattern_i is None:
            self.pattern_i = full
        if self.pattern_v is None:
            self.pattern_v = full


def implicit_from_mixed(form: DissipatorForm) -> ImplicitRelation:
    """r = (controlled quantity) - rho(controlling quantity), edge by edge."""
    cc = form.current_controlled
    n = form.size

    def r(i, v):
        xh, out = form.unflip(np.asarray(i, float), np.asarray(v, float))
        return out - form.rho(xh)

    def d_dx(i, v):
        xh, _ = form.unflip(np.asarray(i, float), np.asarray(v, float))
        return -form.jac(xh)

    def dr_di(i, v):
        J = d_dx(i, v)
        return np.where(cc[None, :], J, 0.0) + np.diag(np.where(cc, 0.0, 1.0))

    def dr_dv(i, v):
        J = d_dx(i, v)
        return np.where(cc[None, :], 0.0, J) + np.diag(np.where(cc, 1.0, 0.0))

    P = form.pattern()
    eye = np.eye(n, dtype=bool)
    pat_i = (P & cc[None, :]) | (eye & ~cc[None, :])
    pat_v = (P & ~cc[None, :]) | (eye & cc[None, :])
    return ImplicitRelation(n, r, dr_di, dr_dv, pat_i, pat_v)


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Source:
    value: ScalarFn
    deriv: ScalarFn

    @classmethod
    def constant(cls, c: float) -> "Source":
        c = float(c)
        return cls(lambda t: c, lambda t: 0.0)

    @classmethod
    def from_element(cls, e: ElementSpec) -> "Source":
        if isinstance(e.law, Constant):
            return cls.constant(e.law.value)
        return cls(compile_expr(e.law.ast), compile_expr(diff_expr(e.law.ast)))


# ---------------------------------------------------------------------------
# circuit model
# ---------------------------------------------------------------------------

@dataclass
class CircuitModel:
    """Graph plus constitutive laws. Each group lists its edges in file order."""
    graph: CircuitGraph
    capacitors: tuple[int, ...]
    inductors: tuple[int, ...]
    dissipators: tuple[int, ...]
    vsources: tuple[int, ...]
    isources: tuple[int, ...]
    cap: Storage
    ind: Storage
    diss: DissipatorForm
    sources: dict[int, Source]
    spec: CircuitSpec | None = field(default=None, repr=False)

    def __post_init__(self):
        for grp, obj in ((self.capacitors, self.cap), (self.inductors, self.ind), (self.dissipators, self.diss)):
            if len(grp) != obj.size:
                raise DimensionMismatch("law group size does not match its edge list")

    @classmethod
    def from_spec(cls, spec: CircuitSpec, cap: Storage | None = None, ind: Storage | None = None,
                  diss: DissipatorForm | None = None) -> "CircuitModel":
        g = CircuitGraph.from_spec(spec)
        groups: dict[str, list[int]] = {k: [] for k in "VICLD"}
        for k, e in enumerate(spec.elements):
            groups[edge_class(e.kind)].append(k)
        el = spec.elements
        if cap is None:
            cap = IndependentStorage([ScalarLaw.from_element(el[k]) for k in groups["C"]])
        if ind is None:
            ind = IndependentStorage([ScalarLaw.from_element(el[k]) for k in groups["L"]])
        if diss is None:
            diss = IndependentDissipator([ScalarLaw.from_element(el[k]) for k in groups["D"]],
                                         ["i" if el[k].kind == "R" else "v" for k in groups["D"]])
        sources = {k: Source.from_element(el[k]) for k in groups["V"] + groups["I"]}
        return cls(g, tuple(groups["C"]), tuple(groups["L"]), tuple(groups["D"]),
                   tuple(groups["V"]), tuple(groups["I"]), cap, ind, diss, sources, spec)

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.names

    def is_linear(self) -> bool:
        return all(obj.linear_matrix() is not None for obj in (self.cap, self.ind, self.diss))


def storage_eval(model: CircuitModel, q: Vector, phi: Vector):
    """(v_C, i_L, Hessian_C, Hessian_L) with q, phi in file order of each group."""
    q = np.asarray(q, float)
    phi = np.asarray(phi, float)
    if q.shape != (model.cap.size,) or phi.shape != (model.ind.size,):
        raise DimensionMismatch("state sizes do not match the storage groups")
    return model.cap.grad(q), model.ind.grad(phi), model.cap.hess(q), model.ind.hess(phi)


def hamiltonian(model: CircuitModel, q: Vector, phi: Vector) -> float:
    return model.cap.energy(np.asarray(q, float)) + model.ind.energy(np.asarray(phi, float))


def dissipator_eval(model: CircuitModel, xh: Vector):
    xh = np.asarray(xh, float)
    if xh.shape != (model.diss.size,):
        raise DimensionMismatch("one controlling value per dissipator")
    return model.diss.eval(xh)


# ---------------------------------------------------------------------------
# passivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PassivityReport:
    capacitors_ok: bool
    inductors_ok: bool
    dissipators_ok: bool
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.capacitors_ok and self.inductors_ok and self.dissipators_ok


def default_sample_points(model: CircuitModel, count: int = 5, seed: int = 0):
    rng = np.random.default_rng(seed)
    pts = [(np.zeros(model.cap.size), np.zeros(model.ind.size), np.zeros(model.diss.size))]
    for _ in range(count - 1):
        pts.append((rng.uniform(-1, 1, model.cap.size), rng.uniform(-1, 1, model.ind.size),
                    rng.uniform(-1, 1, model.diss.size)))
    return pts


def check_passivity(model: CircuitModel, sample_points: Iterable | None = None,
                    relation: ImplicitRelation | None = None) -> PassivityReport:
    """Pointwise PD Hessians of the energy and strict local passivity of the
    dissipators (PD rho' in mixed form, or a PD pair for an implicit relation)."""
    pts = list(sample_points) if sample_points is not None else default_sample_points(model)
    if not pts:
        raise ValueError("need at least one sample point")
    fails: list[str] = []
    okC = okL = okD = True
    for k, (q, phi, xh) in enumerate(pts):
        if not is_pd(model.cap.hess(np.asarray(q, float))):
            okC = False
            fails.append(f"capacitor Hessian not PD at sample {k}")
        if not is_pd(model.ind.hess(np.asarray(phi, float))):
            okL = False
            fails.append(f"inductor Hessian not PD at sample {k}")
        if relation is None:
            if not is_pd(model.diss.jac(np.asarray(xh, float))):
                okD = False
                fails.append(f"dissipator Jacobian not PD at sample {k}")
        else:
            i, v = model.diss.flip(np.asarray(xh, float), model.diss.rho(np.asarray(xh, float)))
            if not is_pdmp(relation.dr_di(i, v), relation.dr_dv(i, v)):
                okD = False
                fails.append(f"dissipator relation not a PD pair at sample {k}")
    return PassivityReport(okC, okL, okD, tuple(fails))


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def join(circuits: Sequence[CircuitSpec], identifications: Sequence[tuple[int, int, int, int]]) -> CircuitSpec:
    """Merge circuits by identifying node pairs ``(ci, node_i, cj, node_j)``.

    Vertices are renumbered 1..n in order of first appearance; edges keep
    concatenation order. Clashing element names get a ``_<circuit index>``
    suffix.
    """
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k, c in enumerate(circuits):
        for node in range(1, c.n + 1):
            find((k, node))
    for ci, ni, cj, nj in identifications:
        if (ci, ni) == (cj, nj):
            raise JoinError(f"node {ni} of circuit {ci} identified with itself")
        for c, nd in ((ci, ni), (cj, nj)):
            if not 0 <= c < len(circuits) or not 1 <= nd <= circuits[c].n:
                raise JoinError(f"no node {nd} in circuit {c}")
        ra, rb = find((ci, ni)), find((cj, nj))
        if ra != rb:
            parent[rb] = ra
    number: dict[tuple[int, int], int] = {}
    all_names = [e.name for c in circuits for e in c.elements]
    elements = []
    for k, c in enumerate(circuits):
        for e in c.elements:
            ends = []
            for nd in (e.from_node, e.to_node):
                root = find((k, nd))
                number.setdefault(root, len(number) + 1)
                ends.append(number[root])
            name = e.name if all_names.count(e.name) == 1 else f"{e.name}_{k}"
            elements.append(ElementSpec(name, e.kind, ends[0], ends[1], e.law))
    return validate_circuit(elements)

