"""Linear time-invariant circuits: the pencil (A, B), its finite
eigenvalues and modal expansions.

With constant laws the Model 2 residual is ``A x - B xdot - u(t)``, rows in
the same order as the DAE residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import DefectiveSpectrum, IrregularPencil, NotLTI, Singular
from .linalg import eig_dense_vectors, lu_solve


@dataclass
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    names: tuple[str, ...]
    row_names: tuple[str, ...]
    row_roles: tuple[str, ...]
    U_V: np.ndarray           # u(t) = U_V V(t) + U_I I(t)
    U_I: np.ndarray
    sys: object

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def dof(self) -> int:
        return int(np.count_nonzero(np.any(self.B != 0, axis=1)))

    def u(self, t: float) -> np.ndarray:
        V, I = self.sys._sources(t)
        return self.U_V @ V + self.U_I @ I

    def residual(self, t: float, x, xd) -> np.ndarray:
        return self.A @ np.asarray(x, float) - self.B @ np.asarray(xd, float) - self.u(t)


def assemble_lti(sys) -> LtiSystem:
    """Build (A, B, u) of a Model 2 system from the element constants.

    Branch currents and voltages on the non-source edges are written as
    ``i = A_i x - B_i xdot`` and ``v = A_v x - B_v xdot``; twig rows apply the
    current law, link rows the voltage law.
    """
    m = sys.model
    if sys.model_kind != 2:
        raise ValueError("LTI assembly uses the Model 2 layout")
    if not m.is_linear():
        raise NotLTI("a capacitor, inductor or dissipator law is nonlinear")
    N = sys.N
    g = m.graph
    b = g.b
    Kc = m.cap.linear_matrix()
    Kl = m.ind.linear_matrix()
    Kd = m.diss.linear_matrix()
    col = {(e, q): j for j, (e, q) in enumerate(zip(sys.layout.edges, sys.layout.quantity))}
    Ai = np.zeros((b, N))
    Bi = np.zeros((b, N))
    Av = np.zeros((b, N))
    Bv = np.zeros((b, N))
    qcols = [col[(e, "q")] for e in m.capacitors]
    pcols = [col[(e, "phi")] for e in m.inductors]
    for k, e in enumerate(m.capacitors):
        Bi[e, qcols[k]] = -1.0
        Av[e, qcols] = Kc[k]
    for k, e in enumerate(m.inductors):
        Ai[e, pcols] = Kl[k]
        Bv[e, pcols[k]] = -1.0
    dcols = [col[(e, m.diss.control[k])] for k, e in enumerate(m.dissipators)]
    for k, e in enumerate(m.dissipators):
        own, other = (Ai, Av) if m.diss.control[k] == "i" else (Av, Ai)
        own[e, dcols[k]] = 1.0
        other[e, dcols] = Kd[k]

    F = np.asarray(sys.tree.F, float)
    twig = {e: c for c, e in enumerate(sys.tree.tree)}
    link = {e: r for r, e in enumerate(sys.tree.cotree)}
    A = np.zeros((N, N))
    B = np.zeros((N, N))
    UV = np.zeros((N, len(m.vsources)))
    UI = np.zeros((N, len(m.isources)))
    vpos = {e: k for k, e in enumerate(m.vsources)}
    ipos = {e: k for k, e in enumerate(m.isources)}
    for r, (name, role) in enumerate(zip(sys.row_names, sys.row_roles)):
        e = g.names.index(name[2:])
        if e in twig:
            c = twig[e]
            w = np.zeros(b)
            w[e] = 1.0
            for l, rr in link.items():
                w[l] -= F[rr, c]
            A[r] = w @ Ai
            B[r] = w @ Bi
            for l, k in ipos.items():
                UI[r, k] = F[link[l], c]          # i_e - sum F i_l, source part moves to u
        else:
            rr = link[e]
            w = np.zeros(b)
            w[e] = 1.0
            for t_, c in twig.items():
                w[t_] += F[rr, c]
            A[r] = w @ Av
            B[r] = w @ Bv
            for v_, k in vpos.items():
                UV[r, k] = -F[rr, twig[v_]]
    return LtiSystem(A, B, tuple(sys.layout.names), tuple(sys.row_names), tuple(sys.row_roles), UV, UI, sys)


# ---------------------------------------------------------------------------
# eigenvalues by linear reduction
# ---------------------------------------------------------------------------

ROOT_TOL = 1e-8


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray         # N x dof, full-space eigenvectors
    reduced_vectors: np.ndarray  # dof x dof, on the ODE coordinates
    M: np.ndarray               # reduced ODE matrix: ydot = M y (homogeneous)
    P: np.ndarray               # x = P y
    ode_vars: tuple[int, ...]
    degree: int
    dof: int


def _reduction(lti: LtiSystem, dof: int):
    A, B = lti.A, lti.B
    N = lti.N
    diff_rows = np.nonzero(np.any(B != 0, axis=1))[0]
    alg_rows = np.setdiff1d(np.arange(N), diff_rows)
    if len(diff_rows) != dof:
        raise IrregularPencil(f"{len(diff_rows)} rows carry derivatives, expected {dof}")
    A0 = A[alg_rows]
    first = [j for j in range(N) if lti.sys.layout.quantity[j] in ("i", "v")]
    z = np.array(sorted(_greedy_columns(A0, first, len(alg_rows))), dtype=int)
    y = np.setdiff1d(np.arange(N), z)
    P = np.zeros((N, len(y)))
    P[y, np.arange(len(y))] = 1.0
    if len(z):
        P[z] = -lu_solve(A0[:, z], A0[:, y])
    try:
        M = lu_solve(B[diff_rows] @ P, A[diff_rows] @ P)
    except Singular as exc:
        raise IrregularPencil(f"reduced mass matrix singular: {exc}") from None
    return M, P, y


def _greedy_columns(A0: np.ndarray, first: list[int], k: int) -> list[int]:
    """k independent columns of A0: all of ``first``, then the largest
    remaining components by Gram-Schmidt."""
    if k == 0:
        return []
    chosen: list[int] = []
    R = A0.astype(float).copy()
    scale = max(1.0, np.abs(A0).max())
    for _ in range(k):
        pool = [j for j in first if j not in chosen] or [j for j in range(A0.shape[1]) if j not in chosen]
        norms = np.linalg.norm(R[:, pool], axis=0)
        j = pool[int(np.argmax(norms))]
        if norms.max() <= 1e-12 * scale:
            raise IrregularPencil("algebraic rows are rank deficient")
        qv = R[:, j] / np.linalg.norm(R[:, j])
        R -= np.outer(qv, qv @ R)
        chosen.append(j)
    return chosen


def char_poly(lti: LtiSystem, degree: int, radius: float) -> np.ndarray:
    """Chebyshev coefficients of det(A - lam B) in the variable lam / radius,
    interpolated from degree + 1 Chebyshev points on [-radius, radius]."""
    k = degree + 1
    s = np.cos(np.pi * (np.arange(k) + 0.5) / k)
    vals = np.array([np.linalg.det(lti.A - radius * sk * lti.B) for sk in s])
    return cheb.chebfit(s, vals, degree)


def char_poly_degree(lti: LtiSystem, radius: float | None = None, rtol: float = 1e-9) -> int:
    """Degree of det(A - lam B), from a full-degree interpolant."""
    N = lti.N
    if radius is None:
        radius = _radius_guess(lti)
    coef = cheb.cheb2poly(char_poly(lti, N, radius))
    mags = np.abs(coef)
    if mags.max() == 0:
        raise IrregularPencil("det(A - lam B) vanishes at every sample")
    nz = np.nonzero(mags > rtol * mags.max())[0]
    return int(nz.max())


def _radius_guess(lti: LtiSystem) -> float:
    nA = np.linalg.norm(lti.A, 2)
    nB = np.linalg.norm(lti.B, 2)
    return max(1.0, nA / nB if nB > 0 else nA)


def char_poly_roots(lti: LtiSystem, dof: int, radius: float) -> np.ndarray:
    if dof == 0:
        return np.zeros(0, complex)
    c = char_poly(lti, dof, radius)
    if np.all(np.abs(c) == 0):
        raise IrregularPencil("det(A - lam B) vanishes at every sample")
    return np.sort_complex(cheb.chebroots(c) * radius)


def finite_eigenvalues(lti: LtiSystem, dof: int | None = None, check: bool = True) -> EigResult:
    """Finite eigenvalues of (A, B) via reduction to ydot = M y.

    With ``check`` the roots of an interpolated det(A - lam B) must agree to
    1e-8 relative."""
    if dof is None:
        dof = lti.dof
    N = lti.N
    radius = _radius_guess(lti)
    samples = [np.linalg.det(lti.A - radius * s * lti.B) for s in np.linspace(-1, 1, dof + 2) + 0.1234]
    if max(abs(v) for v in samples) == 0.0:
        raise IrregularPencil("det(A - lam B) vanishes at dof + 2 samples")
    M, P, y = _reduction(lti, dof)
    if dof:
        vals, W = eig_dense_vectors(M)
        for k in range(dof):
            j = int(np.argmax(np.abs(W[:, k]) > (1 - 1e-12) * np.abs(W[:, k]).max()))
            W[:, k] = W[:, k] / W[j, k]
    else:
        vals, W = np.zeros(0, complex), np.zeros((0, 0), complex)
    degree = dof
    if check and dof:
        rad = max(1.0, float(np.abs(vals).max()))
        mult = (np.abs(vals[:, None] - vals[None, :]) <= 1e-6 * rad).sum(axis=1)
        # one interpolant over the whole spectrum cannot resolve roots many
        # decades below the radius, so each eigenvalue gets nodes scaled to
        # its own magnitude
        err = np.zeros(dof)
        for k, lam in enumerate(vals):
            scale = max(abs(lam), 1e-6 * rad)
            roots = char_poly_roots(lti, dof, 2.0 * scale)
            err[k] = np.abs(roots - lam).min() / scale
        # an m-fold root moves like eps^(1/m), so clusters get tol^(1/m)
        if np.any(err > ROOT_TOL ** (1.0 / mult)):
            raise IrregularPencil(f"characteristic polynomial roots disagree with reduction ({err.max():.2e})")
        degree = char_poly_degree(lti, rad)
    return EigResult(vals, P @ W, W, M, P, tuple(int(j) for j in y), degree, dof)


# ---------------------------------------------------------------------------
# modal expansion
# ---------------------------------------------------------------------------

@dataclass
class ModalSolution:
    coefficients: np.ndarray
    eig: EigResult

    def __call__(self, t: float) -> np.ndarray:
        e = self.eig
        return np.real(e.vectors @ (self.coefficients * np.exp(e.eigenvalues * t)))


def modal_solution(eig: EigResult, x0) -> ModalSolution:
    """Coefficients c with x(0) = sum c_i v_i, solved on the ODE coordinates."""
    if eig.dof == 0:
        return ModalSolution(np.zeros(0, complex), eig)
    W = eig.reduced_vectors
    sv = np.linalg.svd(W, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DefectiveSpectrum("eigenvectors are linearly dependent")
    y0 = np.asarray(x0, float)[list(eig.ode_vars)]
    c = np.linalg.solve(W, y0.astype(complex))
    return ModalSolution(c, eig)
