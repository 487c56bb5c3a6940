"""Dense matrix kernel: exact RREF of incidence-type matrices, pivoted LU,
rank, eigenvalues and positive-definiteness tests for matrices and pairs.

Index conventions are 0-based throughout the package.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import NoConvergence, NonUnimodular, Singular

DEFAULT_SINGULAR_TOL = 1e-12


# ---------------------------------------------------------------------------
# exact integer elimination
# ---------------------------------------------------------------------------

def rref_exact(M, bound: int = 1) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan elimination in integer arithmetic.

    Pivots must be +-1 and every intermediate entry must stay within
    ``[-bound, bound]``; both hold for totally unimodular input such as an
    incidence matrix. Anything else raises :class:`NonUnimodular`.
    """
    R = np.array(M, dtype=np.int64, copy=True)
    if R.ndim != 2:
        raise ValueError("rref_exact expects a 2-D array")
    if R.size and np.abs(R).max() > bound:
        raise NonUnimodular(f"input entry exceeds bound {bound}")
    m, ncols = R.shape
    pivots: list[int] = []
    r = 0
    for j in range(ncols):
        if r == m:
            break
        nz = np.nonzero(R[r:, j])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        piv = R[r, j]
        if piv not in (1, -1):
            raise NonUnimodular(f"pivot {piv} in column {j}")
        R[r] *= piv
        others = np.nonzero(R[:, j])[0]
        for i in others:
            if i != r:
                R[i] -= R[i, j] * R[r]
        if np.abs(R).max() > bound:
            raise NonUnimodular(f"entry left [-{bound},{bound}] after pivot in column {j}")
        pivots.append(j)
        r += 1
    return R, pivots


def _rank_fraction(M) -> int:
    rows = [[Fraction(int(v)) for v in row] for row in np.asarray(M)]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for j in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][j] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        for i in range(r + 1, len(rows)):
            if rows[i][j] != 0:
                f = rows[i][j] / rows[r][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def rank(M, tol: float = DEFAULT_SINGULAR_TOL) -> int:
    """Rank of ``M``; exact for integer input, SVD-based otherwise."""
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError("rank expects a 2-D array")
    if A.size == 0:
        return 0
    if np.issubdtype(A.dtype, np.integer):
        try:
            return len(rref_exact(A)[1])
        except NonUnimodular:
            return _rank_fraction(A)
    s = np.linalg.svd(A.astype(float), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


# ---------------------------------------------------------------------------
# floating point LU
# ---------------------------------------------------------------------------

def lu_factor(A, tol: float = DEFAULT_SINGULAR_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Partial-pivoting LU. Returns the packed factors and the row permutation."""
    LU = np.array(A, dtype=float, copy=True)
    n, m = LU.shape
    if n != m:
        raise ValueError("lu_factor needs a square matrix")
    if not np.all(np.isfinite(LU)):
        raise ValueError("matrix has non-finite entries")
    colmax = np.abs(LU).max(axis=0) if n else np.zeros(0)
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if abs(LU[p, k]) <= tol * colmax[k] or LU[p, k] == 0.0:
            raise Singular(f"pivot {LU[p, k]:.3e} in column {k} below threshold")
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        LU[k + 1:, k] /= LU[k, k]
        LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, perm


def lu_substitute(LU: np.ndarray, perm: np.ndarray, b) -> np.ndarray:
    y = np.asarray(b, dtype=float)[perm].copy()
    n = LU.shape[0]
    for k in range(n):
        y[k] -= LU[k, :k] @ y[:k]
    for k in range(n - 1, -1, -1):
        y[k] = (y[k] - LU[k, k + 1:] @ y[k + 1:]) / LU[k, k]
    return y


def lu_solve(A, b, tol: float = DEFAULT_SINGULAR_TOL) -> np.ndarray:
    """Solve ``A x = b``; raises :class:`Singular` on a tiny pivot."""
    LU, perm = lu_factor(A, tol)
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        return lu_substitute(LU, perm, b)
    return np.column_stack([lu_substitute(LU, perm, b[:, k]) for k in range(b.shape[1])])


def sv_ratio(M) -> float:
    """Smallest over largest singular value (1.0 for an empty matrix)."""
    A = np.asarray(M, dtype=float)
    if A.size == 0:
        return 1.0
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def _pair_conjugates(vals: np.ndarray, tol: float) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex).copy()
    scale = max(1.0, float(np.abs(vals).max())) if vals.size else 1.0
    real = np.abs(vals.imag) <= tol * scale
    vals[real] = vals[real].real
    up = np.nonzero(vals.imag > 0)[0]
    down = np.nonzero(vals.imag < 0)[0]
    if len(up) == len(down):
        used = np.zeros(len(down), dtype=bool)
        for k in up:
            dist = np.abs(vals[down] - np.conj(vals[k]))
            dist[used] = np.inf
            m = int(np.argmin(dist))
            used[m] = True
            vals[down[m]] = np.conj(vals[k])
    return vals


def _sort_key(vals: np.ndarray) -> np.ndarray:
    return np.lexsort((vals.imag, vals.real))


def eig_dense(M) -> np.ndarray:
    """Eigenvalues of a real square matrix, conjugate pairs made exact,
    sorted by (real part, imaginary part)."""
    vals, _ = eig_dense_vectors(M)
    return vals


def eig_dense_vectors(M) -> tuple[np.ndarray, np.ndarray]:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eig_dense needs a square matrix")
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    vals = _pair_conjugates(vals, 1e-14 * A.shape[0])
    order = _sort_key(vals)
    return vals[order], vecs[:, order]


# ---------------------------------------------------------------------------
# positive definiteness
# ---------------------------------------------------------------------------

def is_pd(M, tol: float = DEFAULT_SINGULAR_TOL) -> bool:
    """True iff the symmetric part of ``M`` has all eigenvalues above tol*||M||."""
    A = np.asarray(M, dtype=float)
    if A.shape[0] == 0:
        return True
    sym = 0.5 * (A + A.T)
    lam_min = float(np.linalg.eigvalsh(sym)[0])
    return lam_min > tol * float(np.linalg.norm(A, 2))


def _solve_or_none(B, rhs):
    try:
        return lu_solve(B, rhs)
    except Singular:
        return None


def is_pdmp(B, Bp, tol: float = DEFAULT_SINGULAR_TOL) -> bool:
    """Positive definite matrix pair: ``B y + Bp y' = 0``, nonzero, forces y.y' > 0."""
    B = np.asarray(B, dtype=float)
    Bp = np.asarray(Bp, dtype=float)
    if B.shape != Bp.shape or B.shape[0] != B.shape[1]:
        raise ValueError("is_pdmp expects two square matrices of equal size")
    if B.shape[0] == 0:
        return True
    X = _solve_or_none(B, Bp)
    return X is not None and is_pd(-X, tol)


def is_ndmp(B, Bp, tol: float = DEFAULT_SINGULAR_TOL) -> bool:
    """Negative definite matrix pair (y.y' < 0 on the kernel of [B Bp])."""
    B = np.asarray(B, dtype=float)
    Bp = np.asarray(Bp, dtype=float)
    if B.shape[0] == 0:
        return True
    X = _solve_or_none(B, Bp)
    return X is not None and is_pd(X, tol)

