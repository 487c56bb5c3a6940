"""Consistent initialization, derivative estimation, BDF1/BDF2 integration,
energy audit and reduction of the Model 2 DAE to an explicit ODE.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (NewtonDiverged, Singular, SingularSelection,
                     SingularSubJacobian, StepFailure)
from .linalg import lu_factor, lu_solve

DEFAULT_NEWTON_TOL = 1e-10
DERIVATIVE_FREE_ROLES = ("C", "l", "d", "D", "r")


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

def newton(fun: Callable[[np.ndarray], np.ndarray], jac: Callable[[np.ndarray], np.ndarray],
           x0, tol: float = DEFAULT_NEWTON_TOL, max_iter: int = 50,
           damped: bool = True) -> tuple[np.ndarray, int]:
    """Solve fun(x) = 0. Stops when ||dx|| <= tol * (1 + ||x||).

    With ``damped`` the step is halved until the residual norm decreases
    (at most 10 halvings); the full step is always tried first.
    """
    x = np.array(x0, dtype=float)
    trace: list[float] = []
    F = fun(x)
    for it in range(1, max_iter + 1):
        trace.append(float(np.linalg.norm(F)))
        try:
            dx = lu_solve(jac(x), F)
        except Singular as exc:
            raise SingularSubJacobian(f"Newton matrix singular at iteration {it}: {exc}") from None
        lam = 1.0
        x_new = x - dx
        F_new = fun(x_new)
        if damped:
            f0 = trace[-1]
            for _ in range(10):
                if np.all(np.isfinite(F_new)) and np.linalg.norm(F_new) <= (1 - 1e-4 * lam) * f0 + 1e-300:
                    break
                if np.linalg.norm(lam * dx) <= tol * (1 + np.linalg.norm(x)):
                    break
                lam *= 0.5
                x_new = x - lam * dx
                F_new = fun(x_new)
        if not np.all(np.isfinite(x_new)):
            raise NewtonDiverged("non-finite Newton iterate", trace)
        x, F = x_new, F_new
        if np.linalg.norm(lam * dx) <= tol * (1 + np.linalg.norm(x)):
            return x, it
    trace.append(float(np.linalg.norm(F)))
    raise NewtonDiverged(f"no convergence in {max_iter} iterations", trace)


# ---------------------------------------------------------------------------
# consistent initialization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistentPoint:
    t0: float
    x0: np.ndarray
    xdot0: np.ndarray
    residual_norm: float
    fixed: tuple[int, ...]
    iterations: int


def _resolve_vars(sys, choice: Sequence[int | str]) -> list[int]:
    return [c if isinstance(c, (int, np.integer)) else sys.layout.index(c) for c in choice]


def _hvt_free(sys, rows: np.ndarray) -> list[int]:
    """Columns matched to ``rows`` by a highest-value transversal."""
    from .sigma import hvt, signature_matrix
    perm, _ = hvt(signature_matrix(sys))
    return sorted(int(perm[r]) for r in rows)


def stage0_derivative(sys, t: float, x) -> np.ndarray:
    """xdot from the linear stage-0 system at a point satisfying the
    derivative-free rows: rows c, L as they stand, the remaining rows once
    differentiated in t."""
    x = np.asarray(x, float)
    N = sys.N
    zero = np.zeros(N)
    Jx, Jxd = sys.jacobians(t, x, zero)
    f0 = sys.residual(t, x, zero)
    dfdt = sys.dfdt(t, x, zero)
    J = np.zeros((N, N))
    rhs = np.zeros(N)
    for i, role in enumerate(sys.row_roles):
        if role in ("c", "L"):
            J[i] = Jxd[i]
            rhs[i] = -f0[i]
        else:
            J[i] = Jx[i]
            rhs[i] = -dfdt[i]
    try:
        return lu_solve(J, rhs)
    except Singular as exc:
        raise SingularSubJacobian(f"stage-0 system singular: {exc}") from None


def consistent_point(sys, t0: float = 0.0, guess=None, fixed_choice=None,
                     newton_tol: float = DEFAULT_NEWTON_TOL, max_iter: int = 50) -> ConsistentPoint:
    """Fix ``dof`` components of the guess and solve the derivative-free
    equations for the rest, then recover xdot from the stage-0 system.

    ``fixed_choice`` lists variable indices or names; the default fixes the
    tree-capacitor charges and cotree-inductor fluxes.
    """
    N = sys.N
    if guess is None:
        x = np.ones(N)
    elif np.isscalar(guess):
        x = np.full(N, float(guess))
    else:
        x = np.array(guess, dtype=float)
    rows = sys.rows(*DERIVATIVE_FREE_ROLES)
    user_choice = fixed_choice is not None
    fixed = sorted(_resolve_vars(sys, fixed_choice)) if user_choice else sys.vars("c", "L").tolist()
    free = [j for j in range(N) if j not in set(fixed)]
    zero = np.zeros(N)

    def attempt(free_idx):
        if len(free_idx) != len(rows):
            raise SingularSubJacobian(
                f"{len(rows)} derivative-free equations but {len(free_idx)} free variables")

        def fun(z):
            xx = x.copy()
            xx[free_idx] = z
            return sys.residual(t0, xx, zero)[rows]

        def jac(z):
            xx = x.copy()
            xx[free_idx] = z
            return sys.jacobians(t0, xx, zero)[0][np.ix_(rows, free_idx)]

        if not free_idx:
            return x.copy(), 0
        z, its = newton(fun, jac, x[free_idx], newton_tol, max_iter)
        xx = x.copy()
        xx[free_idx] = z
        return xx, its

    try:
        x0, its = attempt(free)
    except SingularSubJacobian:
        if user_choice:
            raise
        free = _hvt_free(sys, rows)
        fixed = [j for j in range(N) if j not in set(free)]
        x0, its = attempt(free)
    xdot0 = stage0_derivative(sys, t0, x0)
    res = float(np.linalg.norm(sys.residual(t0, x0, xdot0)))
    return ConsistentPoint(float(t0), x0, xdot0, res, tuple(fixed), its)


# ---------------------------------------------------------------------------
# derivative estimation by central differences of implicit Euler steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeEstimate:
    xdot: np.ndarray        # central difference with step h, O(h^2)
    error: float            # estimated norm of the error of ``xdot``
    improved: np.ndarray    # one Richardson level, O(h^4)
    h: float


def _euler_step(sys, t0: float, x0: np.ndarray, s: float, tol: float) -> np.ndarray:
    def fun(x):
        return sys.residual(t0 + s, x, (x - x0) / s)

    def jac(x):
        Jx, Jxd = sys.jacobians(t0 + s, x, (x - x0) / s)
        return Jx + Jxd / s

    return newton(fun, jac, x0, tol)[0]


def central_difference(sys, t0: float, x0, h: float, tol: float = 1e-13) -> np.ndarray:
    x0 = np.asarray(x0, float)
    xp = _euler_step(sys, t0, x0, h, tol)
    xm = _euler_step(sys, t0, x0, -h, tol)
    return (xp - xm) / (2 * h)


def estimate_derivative(sys, cp: ConsistentPoint, h: float | None = None,
                        t1: float | None = None, tol: float = 1e-13) -> DerivativeEstimate:
    """Default ``h`` is 1e-4 of the interval length (or 1e-4 with no interval)."""
    if h is None:
        h = 1e-4 * (abs(t1 - cp.t0) if t1 is not None else 1.0)
    if h <= 0:
        raise ValueError("h must be positive")
    D1 = central_difference(sys, cp.t0, cp.x0, h, tol)
    D2 = central_difference(sys, cp.t0, cp.x0, h / 2, tol)
    improved = (4 * D2 - D1) / 3
    return DerivativeEstimate(D1, float(np.linalg.norm(D1 - improved)), improved, h)


# ---------------------------------------------------------------------------
# BDF integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorConfig:
    order: int = 2
    h: float | None = None          # fixed step; None selects adaptive control
    rtol: float = 1e-6
    atol: float = 1e-8
    newton_tol: float = DEFAULT_NEWTON_TOL
    max_newton: int = 10
    h_init: float | None = None
    h_min: float | None = None
    h_max: float | None = None
    max_steps: int = 1_000_000
    safety: float = 0.9
    growth: float = 2.0

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("BDF order must be 1 or 2")
        if self.h is not None and self.h <= 0:
            raise ValueError("h must be positive")
        if self.rtol <= 0 or self.atol <= 0 or self.newton_tol <= 0:
            raise ValueError("tolerances must be positive")

    @property
    def adaptive(self) -> bool:
        return self.h is None


@dataclass
class Trajectory:
    names: tuple[str, ...]
    output_names: tuple[str, ...]
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    y: np.ndarray
    H: np.ndarray
    balance: np.ndarray
    port: np.ndarray
    dissipation: np.ndarray
    residual: np.ndarray
    steps: int = 0
    rejected: int = 0
    newton_failures: int = 0
    info: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        """State or output column by name."""
        if name in self.names:
            return self.x[:, self.names.index(name)]
        return self.y[:, self.output_names.index(name)]


def _bdf_coeffs(order: int, h: float, h_prev: float | None, x_n, x_nm1):
    """Leading coefficient alpha and history term beta: xdot = (alpha*x - beta)/h."""
    if order == 1 or x_nm1 is None:
        return 1.0, x_n
    w = h / h_prev
    alpha = (1 + 2 * w) / (1 + w)
    beta = (1 + w) * x_n - (w * w / (1 + w)) * x_nm1
    return alpha, beta


class _Recorder:
    def __init__(self, sys):
        self.sys = sys
        self.rows: dict[str, list] = {k: [] for k in
                                      ("t", "x", "xdot", "y", "H", "balance", "port", "dissipation", "residual")}

    def add(self, t, x, xd):
        s = self.sys
        pt = s.power_terms(t, x, xd)
        r = self.rows
        r["t"].append(t)
        r["x"].append(x.copy())
        r["xdot"].append(xd.copy())
        r["y"].append(s.output(t, x, xd).y)
        r["H"].append(s.hamiltonian(x))
        r["balance"].append(pt["balance"])
        r["port"].append(pt["port"])
        r["dissipation"].append(pt["dissipation"])
        r["residual"].append(float(np.linalg.norm(s.residual(t, x, xd))))

    def build(self, **counts) -> Trajectory:
        r = self.rows
        N = self.sys.N
        n_out = len(self.sys.output_names)
        return Trajectory(tuple(self.sys.layout.names), tuple(self.sys.output_names),
                          np.array(r["t"]), np.array(r["x"]).reshape(-1, N),
                          np.array(r["xdot"]).reshape(-1, N), np.array(r["y"]).reshape(len(r["t"]), n_out),
                          np.array(r["H"]), np.array(r["balance"]), np.array(r["port"]),
                          np.array(r["dissipation"]), np.array(r["residual"]), **counts)


def _solve_step(sys, t: float, h: float, alpha: float, beta, guess, cfg: IntegratorConfig):
    def fun(x):
        return sys.residual(t, x, (alpha * x - beta) / h)

    def jac(x):
        Jx, Jxd = sys.jacobians(t, x, (alpha * x - beta) / h)
        return Jx + (alpha / h) * Jxd

    x, _ = newton(fun, jac, guess, cfg.newton_tol, cfg.max_newton, damped=False)
    return x, (alpha * x - beta) / h


def integrate(sys, cp: ConsistentPoint, config: IntegratorConfig, t1: float) -> Trajectory:
    """BDF1/BDF2 from the consistent point ``cp`` to ``t1``."""
    t0 = cp.t0
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    cfg = config
    rec = _Recorder(sys)
    rec.add(t0, cp.x0, cp.xdot0)
    span = t1 - t0
    if not cfg.adaptive:
        return _integrate_fixed(sys, cp, cfg, t1, rec)

    h_min = cfg.h_min if cfg.h_min is not None else 1e-14 * max(1.0, abs(t1)) + 1e-12 * span
    h_max = cfg.h_max if cfg.h_max is not None else span / 10
    h = cfg.h_init if cfg.h_init is not None else min(h_max, 1e-4 * span)
    t = t0
    xs = [cp.x0.copy()]           # most recent last
    hs: list[float] = []
    xd_n = cp.xdot0.copy()
    steps = rejected = nfail = 0
    while t < t1 and steps < cfg.max_steps:
        if t + h >= t1 - 1e-12 * span:
            h = t1 - t
        k = cfg.order if len(xs) >= 2 else 1
        x_n = xs[-1]
        x_nm1 = xs[-2] if k == 2 else None
        h_prev = hs[-1] if hs else None
        # predictor: quadratic extrapolation when three points exist, otherwise Taylor
        if k == 2 and len(xs) >= 3:
            ta, tb, tc = -hs[-2] - hs[-1], -hs[-1], 0.0
            xa, xb, xc = xs[-3], xs[-2], xs[-1]
            s = h
            pred = (xa * (s - tb) * (s - tc) / ((ta - tb) * (ta - tc))
                    + xb * (s - ta) * (s - tc) / ((tb - ta) * (tb - tc))
                    + xc * (s - ta) * (s - tb) / ((tc - ta) * (tc - tb)))
            err_const = _bdf2_err_const(h, hs[-1], hs[-2])
        else:
            pred = x_n + h * xd_n
            # BDF1 after a BDF1 step: xd_n is a backward difference
            err_const = h / (2 * h + h_prev) if (k == 1 and h_prev is not None and cfg.order == 1) else 0.5
        alpha, beta = _bdf_coeffs(k, h, h_prev, x_n, x_nm1)
        try:
            x_new, xd_new = _solve_step(sys, t + h, h, alpha, beta, pred, cfg)
        except (NewtonDiverged, SingularSubJacobian):
            nfail += 1
            h *= 0.5
            if h < h_min:
                raise StepFailure("step size fell below h_min after Newton failures", t) from None
            continue
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x_n), np.abs(x_new))
        err = err_const * (x_new - pred) / scale
        enorm = float(np.sqrt(np.mean(err * err))) if err.size else 0.0
        order_eff = k + 1 if len(xs) >= 3 or k == 1 else k
        if enorm <= 1.0:
            t = t + h
            if abs(t1 - t) <= 1e-12 * span:
                t = t1
            xs.append(x_new)
            if len(xs) > 3:
                xs.pop(0)
            hs.append(h)
            if len(hs) > 2:
                hs.pop(0)
            xd_n = xd_new
            rec.add(t, x_new, xd_new)
            steps += 1
            fac = cfg.growth if enorm == 0 else min(cfg.growth, cfg.safety * enorm ** (-1.0 / order_eff))
            h = min(h_max, h * max(fac, 0.2))
        else:
            rejected += 1
            h *= max(0.2, min(0.9, cfg.safety * enorm ** (-1.0 / order_eff)))
            if h < h_min:
                raise StepFailure("step size fell below h_min after error-test failures", t)
    if t < t1:
        raise StepFailure(f"max_steps={cfg.max_steps} reached", t)
    return rec.build(steps=steps, rejected=rejected, newton_failures=nfail)


def _bdf2_err_const(h: float, h1: float, h2: float) -> float:
    """Ratio of the BDF2 local error to (corrector - predictor) for a
    quadratic-extrapolation predictor; both errors are multiples of the third derivative."""
    c_corr = h * h * (h + h1) ** 2 / (6.0 * (2 * h + h1))
    c_pred = h * (h + h1) * (h + h1 + h2) / 6.0
    return c_corr / (c_corr + c_pred)


def _integrate_fixed(sys, cp: ConsistentPoint, cfg: IntegratorConfig, t1: float, rec: _Recorder) -> Trajectory:
    t0 = cp.t0
    n = max(1, int(round((t1 - t0) / cfg.h)))
    h = (t1 - t0) / n
    x_nm1 = None
    x_n = cp.x0.copy()
    xd = cp.xdot0.copy()
    for k in range(1, n + 1):
        order = cfg.order if k > 1 else 1
        alpha, beta = _bdf_coeffs(order, h, h, x_n, x_nm1)
        t = t0 + k * h
        try:
            x_new, xd = _solve_step(sys, t, h, alpha, beta, x_n + h * xd, cfg)
        except (NewtonDiverged, SingularSubJacobian) as exc:
            raise StepFailure(f"Newton failed with fixed step: {exc}", t - h) from None
        rec.add(t, x_new, xd)
        x_nm1, x_n = x_n, x_new
    return rec.build(steps=n)


# ---------------------------------------------------------------------------
# energy audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyAudit:
    balance: np.ndarray           # pointwise Hdot + dissipation - port
    relative: np.ndarray          # |balance| / (1 + |port|)
    discrete: np.ndarray          # H_{n+1} - H_n - trapezoid of (port - dissipation)
    max_relative: float


def energy_audit(traj: Trajectory, sys=None) -> EnergyAudit:
    """Pointwise and integrated power balance along a trajectory.

    With ``sys`` given the pointwise balance is recomputed from (t, x, xdot)."""
    if sys is not None:
        bal = np.array([sys.power_terms(t, x, xd)["balance"]
                        for t, x, xd in zip(traj.t, traj.x, traj.xdot)])
    else:
        bal = traj.balance
    rel = np.abs(bal) / (1.0 + np.abs(traj.port))
    net = traj.port - traj.dissipation
    dt = np.diff(traj.t)
    disc = np.diff(traj.H) - 0.5 * dt * (net[1:] + net[:-1])
    return EnergyAudit(bal, rel, disc, float(rel.max()) if rel.size else 0.0)


# ---------------------------------------------------------------------------
# reduction to an explicit ODE
# ---------------------------------------------------------------------------

class ReducedODE:
    """Explicit ODE in the non-selected charges and fluxes.

    ``rhs(t, y)`` runs the Newton sub-solves for the selected charges, the
    selected fluxes and the dissipator variables, then the two linear solves
    for all charge and flux derivatives. ``recover(t, y)`` returns the full
    DAE state.
    """

    def __init__(self, sys, q_hat: list[int], phi_hat: list[int], tol: float = 1e-13):
        self.sys = sys
        self.tol = tol
        N = sys.N
        self.q_vars = [j for j in range(N) if sys.layout.quantity[j] == "q"]
        self.phi_vars = [j for j in range(N) if sys.layout.quantity[j] == "phi"]
        self.x_hat = [j for j in range(N) if sys.layout.quantity[j] in ("i", "v")]
        self.q_hat = list(q_hat)
        self.phi_hat = list(phi_hat)
        self.q_tilde = [j for j in self.q_vars if j not in set(q_hat)]
        self.phi_tilde = [j for j in self.phi_vars if j not in set(phi_hat)]
        self.ode_vars = self.q_tilde + self.phi_tilde
        self.rows_C = sys.rows("C").tolist()
        self.rows_c = sys.rows("c").tolist()
        self.rows_l = sys.rows("l").tolist()
        self.rows_L = sys.rows("L").tolist()
        self.rows_dD = sys.rows("d", "D").tolist()
        self._last = np.ones(N)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.sys.layout.names[j] for j in self.ode_vars)

    @property
    def dim(self) -> int:
        return len(self.ode_vars)

    def initial_state(self, x0) -> np.ndarray:
        return np.asarray(x0, float)[self.ode_vars]

    def _subsolve(self, t, x, rows, cols):
        if not rows:
            return x
        zero = np.zeros(self.sys.N)

        def fun(z):
            xx = x.copy()
            xx[cols] = z
            return self.sys.residual(t, xx, zero)[rows]

        def jac(z):
            xx = x.copy()
            xx[cols] = z
            return self.sys.jacobians(t, xx, zero)[0][np.ix_(rows, cols)]

        try:
            z, _ = newton(fun, jac, x[cols], self.tol)
        except SingularSubJacobian as exc:
            raise SingularSelection(f"selected columns degenerate: {exc}") from None
        x = x.copy()
        x[cols] = z
        return x

    def recover(self, t: float, y) -> np.ndarray:
        x = self._last.copy()
        x[self.ode_vars] = np.asarray(y, float)
        x = self._subsolve(t, x, self.rows_C, self.q_hat)
        x = self._subsolve(t, x, self.rows_l, self.phi_hat)
        x = self._subsolve(t, x, self.rows_dD, self.x_hat)
        self._last = x
        return x

    def derivatives(self, t: float, x) -> np.ndarray:
        """Full xdot at an algebraically consistent state ``x``."""
        s = self.sys
        N = s.N
        zero = np.zeros(N)
        Jx, Jxd = s.jacobians(t, x, zero)
        f0 = s.residual(t, x, zero)
        dfdt = s.dfdt(t, x, zero)
        xd = np.zeros(N)
        q, p = self.q_vars, self.phi_vars
        if q:
            M = np.vstack([Jx[np.ix_(self.rows_C, q)], Jxd[np.ix_(self.rows_c, q)]])
            rhs = -np.concatenate([dfdt[self.rows_C], f0[self.rows_c]])
            xd[q] = lu_solve(M, rhs)
        if p:
            # the flux rows may read charge derivatives through nothing else, so
            # only the t-derivative of sources and the undifferentiated L rows enter
            M = np.vstack([Jx[np.ix_(self.rows_l, p)], Jxd[np.ix_(self.rows_L, p)]])
            rhs_l = -(dfdt[self.rows_l] + Jx[np.ix_(self.rows_l, q)] @ xd[q]) if q else -dfdt[self.rows_l]
            rhs = np.concatenate([rhs_l, -(f0[self.rows_L])])
            xd[p] = lu_solve(M, rhs)
        if self.x_hat:
            # differentiate the dissipator rows for completeness
            other = [j for j in range(N) if j not in set(self.x_hat)]
            M = Jx[np.ix_(self.rows_dD, self.x_hat)]
            rhs = -(dfdt[self.rows_dD] + Jx[np.ix_(self.rows_dD, other)] @ xd[other])
            xd[self.x_hat] = lu_solve(M, rhs)
        return xd

    def rhs(self, t: float, y) -> np.ndarray:
        x = self.recover(t, y)
        try:
            xd = self.derivatives(t, x)
        except Singular as exc:
            raise SingularSelection(str(exc)) from None
        return xd[self.ode_vars]


def _greedy_columns(M: np.ndarray, cols: list[int], k: int) -> list[int]:
    """k columns of M (restricted to ``cols``) chosen by column-pivoted QR."""
    from scipy.linalg import qr
    if k == 0:
        return []
    _, R, piv = qr(M[:, cols], pivoting=True)
    chosen = piv[:k]
    if abs(R[k - 1, k - 1]) <= 1e-12 * max(1.0, abs(R[0, 0])):
        raise SingularSelection("no nonsingular column selection exists")
    return sorted(cols[c] for c in chosen)


def _selection_ok(J: np.ndarray) -> bool:
    if J.size == 0:
        return True
    try:
        lu_factor(J)
        return True
    except Singular:
        return False


def reduce_to_ode(sys, sample=None, selection: str = "hvt", tol: float = 1e-13) -> ReducedODE:
    """Select q_hat and phi_hat and build the reduced ODE.

    ``selection='hvt'`` takes the columns a highest-value transversal matches
    to the f_C and f_l rows; if that choice is singular at ``sample``
    (default: a consistent point at t=0) greedy column pivoting is used.
    """
    if sys.model_kind != 2:
        raise ValueError("reduction is defined for Model 2 systems")
    rows_C = sys.rows("C").tolist()
    rows_l = sys.rows("l").tolist()
    N = sys.N
    q_vars = [j for j in range(N) if sys.layout.quantity[j] == "q"]
    phi_vars = [j for j in range(N) if sys.layout.quantity[j] == "phi"]
    if sample is None:
        cp = consistent_point(sys, 0.0)
        sample = (cp.t0, cp.x0, cp.xdot0)
    t, x, xd = sample
    Jx, _ = sys.jacobians(t, x, xd)
    if selection == "hvt":
        from .sigma import hvt, signature_matrix
        perm, _ = hvt(signature_matrix(sys))
        q_hat = sorted(int(perm[r]) for r in rows_C)
        phi_hat = sorted(int(perm[r]) for r in rows_l)
        if (not set(q_hat) <= set(q_vars) or not set(phi_hat) <= set(phi_vars)
                or not _selection_ok(Jx[np.ix_(rows_C, q_hat)])
                or not _selection_ok(Jx[np.ix_(rows_l, phi_hat)])):
            selection = "pivot"
    if selection == "pivot":
        q_hat = _greedy_columns(Jx[rows_C], q_vars, len(rows_C))
        phi_hat = _greedy_columns(Jx[rows_l], phi_vars, len(rows_l))
    elif selection != "hvt":
        raise ValueError(f"unknown selection {selection!r}")
    red = ReducedODE(sys, q_hat, phi_hat, tol)
    red._last = np.asarray(x, float).copy()
    return red
