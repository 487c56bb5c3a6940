"""Assembly of the compact port-Hamiltonian DAE ``0 = f(t, x, xdot)`` with
outputs ``y = (i_v, v_I)``.

Rows are Kirchhoff laws written with the Kron matrix: one current law per
non-source twig and one voltage law per non-source link. After the
constitutive substitutions the blocks come out in the order

    f_C (KVL of link capacitors)     f_c (KCL of twig capacitors)
    f_l (KCL of twig inductors)      f_L (KVL of link inductors)
    f_d (KCL of twig dissipators)    f_D (KVL of link dissipators)

and Model 1 appends the dissipator relation rows r(i_D, v_D) = 0.
Variables are (q_C, q_c, phi_l, phi_L, xhat) where xhat holds the
controlling quantity of each dissipator (Model 2) or (i_d, v_D, v_d, i_D)
(Model 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotNormal
from .graph import NormalTree
from .model import (BlockF, CircuitModel, EdgeSplit, ImplicitRelation,
                    implicit_from_mixed, split_edges)

ROW_ORDER = ("C", "c", "l", "L", "d", "D")


@dataclass(frozen=True)
class VarLayout:
    names: tuple[str, ...]
    roles: tuple[str, ...]    # split class of the owning edge, or 'i'/'v' suffix for Model 1 dissipators
    edges: tuple[int, ...]
    quantity: tuple[str, ...]  # 'q', 'phi', 'i' or 'v'

    @property
    def N(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class OutputSample:
    i_v: np.ndarray
    v_I: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return np.concatenate([self.i_v, self.v_I])


@dataclass
class CpHSystem:
    model: CircuitModel
    tree: NormalTree
    split: EdgeSplit
    blocks: BlockF
    layout: VarLayout
    row_names: tuple[str, ...]
    row_roles: tuple[str, ...]
    model_kind: int
    relation: ImplicitRelation | None
    output_names: tuple[str, ...]
    # internal assembly data
    _Mi: np.ndarray = field(repr=False)
    _Mv: np.ndarray = field(repr=False)
    _Oi: np.ndarray = field(repr=False)
    _Ov: np.ndarray = field(repr=False)
    _cap_vars: np.ndarray = field(repr=False)
    _ind_vars: np.ndarray = field(repr=False)
    _dis_vars: np.ndarray = field(repr=False)      # Model 2: xhat var per dissipator
    _dis_ivars: np.ndarray = field(repr=False)     # Model 1
    _dis_vvars: np.ndarray = field(repr=False)
    _pattern: np.ndarray = field(repr=False)       # (2, N, N) bool: orders 0 and 1

    # ----- sizes --------------------------------------------------------
    @property
    def N(self) -> int:
        return self.layout.N

    def rows(self, *roles: str) -> np.ndarray:
        return np.array([k for k, r in enumerate(self.row_roles) if r in roles], dtype=int)

    def vars(self, *roles: str) -> np.ndarray:
        return np.array([k for k, r in enumerate(self.layout.roles) if r in roles], dtype=int)

    @property
    def pattern(self) -> np.ndarray:
        return self._pattern.copy()

    def occurrences(self, row: int) -> set[tuple[int, int]]:
        """Set of (variable index, derivative order) read by ``row``."""
        return {(j, k) for k in (0, 1) for j in np.nonzero(self._pattern[k, row])[0].tolist()}

    # ----- evaluation ---------------------------------------------------
    def _check(self, x, xd):
        x = np.asarray(x, dtype=float)
        xd = np.asarray(xd, dtype=float)
        if x.shape != (self.N,) or xd.shape != (self.N,):
            raise DimensionMismatch(f"expected vectors of length {self.N}, got {x.shape} and {xd.shape}")
        return x, xd

    def _sources(self, t: float):
        m = self.model
        V = np.array([m.sources[e].value(t) for e in m.vsources], dtype=float)
        I = np.array([m.sources[e].value(t) for e in m.isources], dtype=float)
        return V, I

    def _source_derivs(self, t: float):
        m = self.model
        V = np.array([m.sources[e].deriv(t) for e in m.vsources], dtype=float)
        I = np.array([m.sources[e].deriv(t) for e in m.isources], dtype=float)
        return V, I

    def _branch(self, t, x, xd):
        """Edge currents and voltages implied by (t, x, xdot); output slots stay 0."""
        m = self.model
        b = m.graph.b
        i = np.zeros(b)
        v = np.zeros(b)
        cap = np.asarray(m.capacitors, dtype=int)
        ind = np.asarray(m.inductors, dtype=int)
        dis = np.asarray(m.dissipators, dtype=int)
        if cap.size:
            i[cap] = xd[self._cap_vars]
            v[cap] = m.cap.grad(x[self._cap_vars])
        if ind.size:
            i[ind] = m.ind.grad(x[self._ind_vars])
            v[ind] = xd[self._ind_vars]
        if dis.size:
            if self.model_kind == 2:
                iD, vD = m.diss.flip(x[self._dis_vars], m.diss.rho(x[self._dis_vars]))
            else:
                iD, vD = x[self._dis_ivars], x[self._dis_vvars]
            i[dis] = iD
            v[dis] = vD
        V, I = self._sources(t)
        if len(m.vsources):
            v[list(m.vsources)] = V
        if len(m.isources):
            i[list(m.isources)] = I
        return i, v

    def residual(self, t: float, x, xd) -> np.ndarray:
        x, xd = self._check(x, xd)
        i, v = self._branch(t, x, xd)
        f = self._Mi @ i + self._Mv @ v
        if self.model_kind == 1 and self.relation is not None and len(self.model.dissipators):
            f = f.copy()
            f[self.rows("r")] = self.relation.r(x[self._dis_ivars], x[self._dis_vvars])
        return f

    def _branch_jacobians(self, x):
        m = self.model
        b, N = m.graph.b, self.N
        di_dx = np.zeros((b, N))
        dv_dx = np.zeros((b, N))
        di_dxd = np.zeros((b, N))
        dv_dxd = np.zeros((b, N))
        cap = list(m.capacitors)
        ind = list(m.inductors)
        dis = list(m.dissipators)
        if cap:
            di_dxd[cap, self._cap_vars] = 1.0
            dv_dx[np.ix_(cap, self._cap_vars)] = m.cap.hess(x[self._cap_vars])
        if ind:
            di_dx[np.ix_(ind, self._ind_vars)] = m.ind.hess(x[self._ind_vars])
            dv_dxd[ind, self._ind_vars] = 1.0
        if dis:
            if self.model_kind == 2:
                J = m.diss.jac(x[self._dis_vars])
                for k, e in enumerate(dis):
                    own, other = (di_dx, dv_dx) if m.diss.control[k] == "i" else (dv_dx, di_dx)
                    own[e, self._dis_vars[k]] = 1.0
                    other[e, self._dis_vars] = J[k]
            else:
                di_dx[dis, self._dis_ivars] = 1.0
                dv_dx[dis, self._dis_vvars] = 1.0
        return di_dx, dv_dx, di_dxd, dv_dxd

    def jacobians(self, t: float, x, xd) -> tuple[np.ndarray, np.ndarray]:
        """(df/dx, df/dxdot)."""
        x, xd = self._check(x, xd)
        di_dx, dv_dx, di_dxd, dv_dxd = self._branch_jacobians(x)
        Jx = self._Mi @ di_dx + self._Mv @ dv_dx
        Jxd = self._Mi @ di_dxd + self._Mv @ dv_dxd
        if self.model_kind == 1 and self.relation is not None and len(self.model.dissipators):
            r = self.rows("r")
            iD, vD = x[self._dis_ivars], x[self._dis_vvars]
            Jx[r] = 0.0
            Jx[np.ix_(r, self._dis_ivars)] = self.relation.dr_di(iD, vD)
            Jx[np.ix_(r, self._dis_vvars)] += self.relation.dr_dv(iD, vD)
            Jxd[r] = 0.0
        return Jx, Jxd

    def dfdt(self, t: float, x=None, xd=None) -> np.ndarray:
        """Explicit time derivative of the residual (only sources depend on t)."""
        m = self.model
        dV, dI = self._source_derivs(t)
        out = np.zeros(self.N)
        if len(m.vsources):
            out += self._Mv[:, list(m.vsources)] @ dV
        if len(m.isources):
            out += self._Mi[:, list(m.isources)] @ dI
        return out

    def branch_quantities(self, t: float, x, xd) -> tuple[np.ndarray, np.ndarray]:
        """Full edge current and voltage vectors, outputs filled in by KCL/KVL."""
        x, xd = self._check(x, xd)
        i, v = self._branch(t, x, xd)
        m = self.model
        if len(m.vsources):
            i[list(m.vsources)] = self._Oi @ i
        if len(m.isources):
            v[list(m.isources)] = self._Ov @ v
        return i, v

    def output(self, t: float, x, xd) -> OutputSample:
        x, xd = self._check(x, xd)
        i, v = self._branch(t, x, xd)
        return OutputSample(self._Oi @ i, self._Ov @ v)

    # ----- energy -------------------------------------------------------
    def charges(self, x) -> np.ndarray:
        return np.asarray(x, float)[self._cap_vars]

    def fluxes(self, x) -> np.ndarray:
        return np.asarray(x, float)[self._ind_vars]

    def hamiltonian(self, x) -> float:
        m = self.model
        return m.cap.energy(self.charges(x)) + m.ind.energy(self.fluxes(x))

    def power_terms(self, t: float, x, xd) -> dict[str, float]:
        """H rate, dissipated power and power delivered by the sources.

        Tellegen's theorem gives ``Hdot + dissipation - port = 0`` whenever
        the Kirchhoff rows of the residual vanish."""
        x, xd = self._check(x, xd)
        m = self.model
        i, v = self.branch_quantities(t, x, xd)
        hdot = float(m.cap.grad(x[self._cap_vars]) @ xd[self._cap_vars]
                     + m.ind.grad(x[self._ind_vars]) @ xd[self._ind_vars])
        dis = list(m.dissipators)
        diss = float(i[dis] @ v[dis])
        src = list(m.vsources) + list(m.isources)
        port = -float(i[src] @ v[src])
        return {"Hdot": hdot, "dissipation": diss, "port": port, "balance": hdot + diss - port}


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _layout(model: CircuitModel, split: EdgeSplit, kind: int) -> VarLayout:
    names, roles, edges, qty = [], [], [], []
    nm = model.names

    def add(role, e, q):
        names.append(f"{q}_{nm[e]}")
        roles.append(role)
        edges.append(e)
        qty.append(q)

    for role in ("C", "c"):
        for e in getattr(split, role):
            add(role, e, "q")
    for role in ("l", "L"):
        for e in getattr(split, role):
            add(role, e, "phi")
    ctrl = {e: model.diss.control[k] for k, e in enumerate(model.dissipators)}
    if kind == 2:
        for role in ("d", "D"):
            for e in getattr(split, role):
                add(role, e, ctrl[e])
    else:
        for role, q in (("d", "i"), ("D", "v"), ("d", "v"), ("D", "i")):
            for e in getattr(split, role):
                add(role + q, e, q)
    return VarLayout(tuple(names), tuple(roles), tuple(edges), tuple(qty))


def _assemble(model: CircuitModel, nt: NormalTree, kind: int, relation: ImplicitRelation | None,
              require_normal: bool) -> CpHSystem:
    if require_normal and not nt.normal:
        raise NotNormal("tree is not normal; pass require_normal=False to assemble anyway")
    g = model.graph
    split = split_edges(nt.tree, g.kinds)
    blocks = BlockF(nt, split)
    layout = _layout(model, split, kind)
    var_of = {}
    for j, (e, q) in enumerate(zip(layout.edges, layout.quantity)):
        var_of[(e, q)] = j
    twig_pos = {e: c for c, e in enumerate(nt.tree)}
    link_pos = {e: r for r, e in enumerate(nt.cotree)}
    F = nt.F.astype(float)
    b = g.b

    row_names, row_roles, Mi_rows, Mv_rows = [], [], [], []
    for role in ROW_ORDER:
        for e in getattr(split, role):
            mi = np.zeros(b)
            mv = np.zeros(b)
            if role.islower():      # current law of a twig: i_e - sum_links F[l,e] i_l
                mi[e] = 1.0
                col = twig_pos[e]
                for link, r in link_pos.items():
                    mi[link] -= F[r, col]
            else:                   # voltage law of a link: v_e + sum_twigs F[e,s] v_s
                mv[e] = 1.0
                r = link_pos[e]
                for twig, c in twig_pos.items():
                    mv[twig] += F[r, c]
            row_names.append(f"f_{g.names[e]}")
            row_roles.append(role)
            Mi_rows.append(mi)
            Mv_rows.append(mv)
    if kind == 1:
        if relation is None:
            relation = implicit_from_mixed(model.diss)
        if relation.size != len(model.dissipators):
            raise DimensionMismatch(f"relation has size {relation.size}, circuit has {len(model.dissipators)} dissipators")
        for e in model.dissipators:
            row_names.append(f"r_{g.names[e]}")
            row_roles.append("r")
            Mi_rows.append(np.zeros(b))
            Mv_rows.append(np.zeros(b))
    N = layout.N
    Mi = np.array(Mi_rows).reshape(len(row_names), b)
    Mv = np.array(Mv_rows).reshape(len(row_names), b)
    if len(row_names) != N:
        raise DimensionMismatch(f"{len(row_names)} equations for {N} unknowns")

    Oi = np.zeros((len(model.vsources), b))
    for k, e in enumerate(model.vsources):
        for link, r in link_pos.items():
            Oi[k, link] = F[r, twig_pos[e]]
    Ov = np.zeros((len(model.isources), b))
    for k, e in enumerate(model.isources):
        for twig, c in twig_pos.items():
            Ov[k, twig] = -F[link_pos[e], c]

    cap_vars = np.array([var_of[(e, "q")] for e in model.capacitors], dtype=int)
    ind_vars = np.array([var_of[(e, "phi")] for e in model.inductors], dtype=int)
    if kind == 2:
        dis_vars = np.array([var_of[(e, model.diss.control[k])] for k, e in enumerate(model.dissipators)], dtype=int)
        dis_i = dis_v = np.zeros(0, dtype=int)
    else:
        dis_vars = np.zeros(0, dtype=int)
        dis_i = np.array([var_of[(e, "i")] for e in model.dissipators], dtype=int)
        dis_v = np.array([var_of[(e, "v")] for e in model.dissipators], dtype=int)

    # structural pattern from element dependency patterns
    P_i0 = np.zeros((b, N), bool)
    P_v0 = np.zeros((b, N), bool)
    P_i1 = np.zeros((b, N), bool)
    P_v1 = np.zeros((b, N), bool)
    cap, ind, dis = list(model.capacitors), list(model.inductors), list(model.dissipators)
    if cap:
        P_i1[cap, cap_vars] = True
        P_v0[np.ix_(cap, cap_vars)] = model.cap.pattern()
    if ind:
        P_i0[np.ix_(ind, ind_vars)] = model.ind.pattern()
        P_v1[ind, ind_vars] = True
    if dis:
        if kind == 2:
            Pd = model.diss.pattern()
            for k, e in enumerate(dis):
                own, other = (P_i0, P_v0) if model.diss.control[k] == "i" else (P_v0, P_i0)
                own[e, dis_vars[k]] = True
                other[e, dis_vars] |= Pd[k]
        else:
            P_i0[dis, dis_i] = True
            P_v0[dis, dis_v] = True
    Ai, Av = np.abs(Mi) > 0, np.abs(Mv) > 0
    P0 = (Ai.astype(int) @ P_i0.astype(int) + Av.astype(int) @ P_v0.astype(int)) > 0
    P1 = (Ai.astype(int) @ P_i1.astype(int) + Av.astype(int) @ P_v1.astype(int)) > 0
    if kind == 1 and dis:
        r = [k for k, rr in enumerate(row_roles) if rr == "r"]
        P0[np.ix_(r, dis_i)] |= relation.pattern_i
        P0[np.ix_(r, dis_v)] |= relation.pattern_v
    out_names = tuple([f"i_{g.names[e]}" for e in model.vsources] + [f"v_{g.names[e]}" for e in model.isources])
    return CpHSystem(model, nt, split, blocks, layout, tuple(row_names), tuple(row_roles), kind,
                     relation if kind == 1 else None, out_names,
                     Mi, Mv, Oi, Ov, cap_vars, ind_vars, dis_vars, dis_i, dis_v, np.stack([P0, P1]))


def build_model2(model: CircuitModel, tree: NormalTree, require_normal: bool = True) -> CpHSystem:
    return _assemble(model, tree, 2, None, require_normal)


def build_model1(model: CircuitModel, tree: NormalTree, r_relation: ImplicitRelation | None = None,
                 require_normal: bool = True) -> CpHSystem:
    return _assemble(model, tree, 1, r_relation, require_normal)


def residual(sys: CpHSystem, t: float, x, xd) -> np.ndarray:
    return sys.residual(t, x, xd)


def output(sys: CpHSystem, t: float, x, xd) -> OutputSample:
    return sys.output(t, x, xd)
