"""Signature-matrix structural analysis of first-order DAEs.

The signature matrix holds the highest derivative order of each variable in
each equation (-inf when absent). A highest-value transversal and offsets
``d_j - c_i >= sigma_ij`` (equality on the transversal) define the system
Jacobian, whose nonsingularity certifies the structural analysis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidOffsets, StructurallyIllPosed
from .linalg import sv_ratio

NEG_INF = -np.inf
AMENABLE_TOL = 1e-9
PROVISIONAL_ZERO_ROWS = ("c", "L")


@dataclass(frozen=True)
class Offsets:
    c: np.ndarray
    d: np.ndarray
    flavor: str

    @property
    def structural_index(self) -> int:
        if self.c.size == 0:
            return 0
        return int(self.c.max()) + (1 if np.any(self.d == 0) else 0)

    def value(self) -> int:
        return int(self.d.sum() - self.c.sum())


@dataclass(frozen=True)
class SigmaAnalysis:
    sigma: np.ndarray
    transversal: np.ndarray
    val: int
    offsets: Offsets
    canonical: Offsets
    J: np.ndarray
    sv_ratio: float
    amenable: bool
    structural_index: int
    canonical_index: int
    dof: int
    sample: tuple[float, np.ndarray, np.ndarray]


def signature_matrix(sys) -> np.ndarray:
    """Build sigma from the recorded occurrence pattern of ``sys``."""
    P = sys.pattern
    return np.where(P[1], 1.0, np.where(P[0], 0.0, NEG_INF))


def hvt(S) -> tuple[np.ndarray, int]:
    """Highest-value transversal as a row -> column permutation, and its value.

    Among optimal transversals the one using most diagonal entries is taken.
    """
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    if S.shape != (N, N):
        raise ValueError("signature matrix must be square")
    if N == 0:
        return np.zeros(0, dtype=int), 0
    finite = np.isfinite(S)
    if not finite.any(axis=1).all() or not finite.any(axis=0).all():
        raise StructurallyIllPosed("an equation or variable has no finite entry")
    W = np.where(finite, S * (N + 1) + np.eye(N), 0.0)
    big = 2.0 * (N + 1) * (np.abs(W).max() + 1.0)
    W = np.where(finite, W, -big)
    rows, cols = linear_sum_assignment(W, maximize=True)
    perm = np.empty(N, dtype=int)
    perm[rows] = cols
    if not finite[np.arange(N), perm].all():
        raise StructurallyIllPosed("no transversal of finite entries exists")
    return perm, int(S[np.arange(N), perm].sum())


def canonical_offsets(S, perm) -> Offsets:
    """Smallest nonnegative offsets, by the standard fixed-point iteration."""
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    c = np.zeros(N, dtype=np.int64)
    d = np.zeros(N, dtype=np.int64)
    if N == 0:
        return Offsets(c, d, "canonical")
    diag = S[np.arange(N), perm]
    while True:
        d_new = np.max(np.where(np.isfinite(S), S + c[:, None], NEG_INF), axis=0).astype(np.int64)
        c_new = d_new[perm] - diag.astype(np.int64)
        if np.array_equal(c_new, c) and np.array_equal(d_new, d):
            return Offsets(c, d, "canonical")
        c, d = c_new, d_new


def offsets_valid(S, off: Offsets, val: int | None = None) -> bool:
    S = np.asarray(S, dtype=float)
    if np.any(off.c < 0) or np.any(off.d < 0):
        return False
    gap = off.d[None, :] - off.c[:, None]
    if np.any(np.isfinite(S) & (gap < S)):
        return False
    if val is None:
        val = hvt(S)[1]
    return off.value() == val


def provisional_offsets(sys) -> Offsets:
    """c = 0 on the f_c, f_L rows and 1 elsewhere; d = 1."""
    c = np.array([0 if r in PROVISIONAL_ZERO_ROWS else 1 for r in sys.row_roles], dtype=np.int64)
    d = np.ones(sys.N, dtype=np.int64)
    off = Offsets(c, d, "provisional")
    S = signature_matrix(sys)
    if sys.N and not offsets_valid(S, off):
        raise InvalidOffsets("provisional offsets violate d_j - c_i >= sigma_ij or miss the transversal value")
    return off


def jacobian_from_offsets(Jx: np.ndarray, Jxd: np.ndarray, off: Offsets) -> np.ndarray:
    gap = off.d[None, :] - off.c[:, None]
    return np.where(gap == 0, Jx, np.where(gap == 1, Jxd, 0.0))


def system_jacobian(sys, off: Offsets, t: float, x, xd) -> np.ndarray:
    Jx, Jxd = sys.jacobians(t, x, xd)
    return jacobian_from_offsets(Jx, Jxd, off)


def fd_jacobians(sys, t: float, x, xd, h: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference (df/dx, df/dxdot); used as a cross-check."""
    x = np.asarray(x, float)
    xd = np.asarray(xd, float)
    N = len(x)
    Jx = np.zeros((N, N))
    Jxd = np.zeros((N, N))
    for j in range(N):
        step = h * max(1.0, abs(x[j]))
        e = np.zeros(N)
        e[j] = step
        Jx[:, j] = (sys.residual(t, x + e, xd) - sys.residual(t, x - e, xd)) / (2 * step)
        step = h * max(1.0, abs(xd[j]))
        e = np.zeros(N)
        e[j] = step
        Jxd[:, j] = (sys.residual(t, x, xd + e) - sys.residual(t, x, xd - e)) / (2 * step)
    return Jx, Jxd


def analyze(sys, sample=None) -> SigmaAnalysis:
    """Full verdict at ``sample = (t, x, xdot)`` (default: a consistent point)."""
    S = signature_matrix(sys)
    perm, val = hvt(S)
    canon = canonical_offsets(S, perm)
    try:
        prov = provisional_offsets(sys)
    except InvalidOffsets:
        # block structure does not certify anything (e.g. a non-normal tree)
        prov = canon
    if sample is None:
        from .solver import consistent_point
        cp = consistent_point(sys, 0.0)
        sample = (cp.t0, cp.x0, cp.xdot0)
    t, x, xd = sample
    J = system_jacobian(sys, prov, t, x, xd)
    ratio = sv_ratio(J)
    return SigmaAnalysis(S, perm, val, prov, canon, J, ratio, ratio > AMENABLE_TOL,
                         prov.structural_index, canon.structural_index, val,
                         (float(t), np.asarray(x, float), np.asarray(xd, float)))
