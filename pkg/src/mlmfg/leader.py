"""Leaders' smoothed Nash game as a nonlinear complementarity problem.

With ``F(x)`` the stacked gradients of the smoothed reduced leader
objectives, the stationarity conditions over ``X = {Ax <= b, x >= 0}`` are::

    0 <= F(x) + A^T mu  _|_  x  >= 0
    0 <= b - A x        _|_  mu >= 0

Writing ``v = (x, mu)`` and ``Fhat(v)`` for the two left-hand sides, the
NCP is the nonsmooth equation ``Psi(v) = fb(v, Fhat(v)) = 0``, solved by a
semismooth Newton method globalized with a line search on
``1/2 ||Psi||^2``.
"""
from dataclasses import dataclass, field

import numpy as np

from ._linalg import lu_solve_checked
from .errors import DimensionError, LinearSolveFailure, LineSearchFailure, MaxIterations, SolverError
from .follower import response_jacobian, solve_followers
from .projection import project_polyhedron
from .smoothing import fb, fb_gradient, natural_residual

ARMIJO_SIGMA = 1e-4
ARMIJO_BETA = 0.5
MAX_BACKTRACKS = 40
MAX_ITER = 200
FD_STEP = 1e-5
DESCENT_TOL = 1e-12


def stopping_tol(model):
    """Natural-residual threshold ``(n + p) * 1e-6``."""
    return (model.dims.n + model.dims.p) * 1e-6


@dataclass
class LeaderState:
    x: np.ndarray
    mu: np.ndarray
    iterations: int = field(default=0, compare=False)
    trace: list = field(default_factory=list, compare=False, repr=False)
    follower: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)

    @property
    def v(self):
        return np.concatenate([self.x, self.mu])

    @property
    def singular_solves(self):
        return sum(1 for rec in self.trace if rec["direction"].endswith("singular"))


def leader_field(model, x, eps, warm=None, return_state=False):
    """Stacked ``grad_{x^nu} theta^nu + grad_{x^nu} y_eps(x) grad_y theta^nu``.

    The follower response and its implicit Jacobian are evaluated at
    ``(x, eps)``; ``warm`` seeds the follower Newton solve.
    """
    x = np.asarray(x, dtype=float)
    w = solve_followers(model, x, eps, warm=warm)
    _, dy = response_jacobian(model, x, w, eps)
    F = np.empty(model.dims.n)
    for nu, s in enumerate(model.dims.leader_slices()):
        F[s] = model.leader_grad_x(nu, x, w.y) + dy[s] @ model.leader_grad_y(nu, x, w.y)
    return (F, w) if return_state else F


def _split(model, v):
    v = np.asarray(v.v if isinstance(v, LeaderState) else v, dtype=float)
    n, p = model.dims.n, model.dims.p
    if v.shape != (n + p,):
        raise DimensionError(f"leader NCP vector has shape {v.shape}, expected ({n + p},)")
    return v, v[:n], v[n:]


def _fhat(model, F, x, mu):
    A, b = model.leader_constraints()
    return np.concatenate([F + A.T @ mu, b - A @ x])


def ncp_map(model, v, eps, warm=None, return_state=False):
    """``Fhat(v) = [F(x) + A^T mu; b - A x]``."""
    v, x, mu = _split(model, v)
    F, w = leader_field(model, x, eps, warm=warm, return_state=True)
    out = _fhat(model, F, x, mu)
    return (out, w) if return_state else out


def ncp_residual(model, v, eps, warm=None):
    """``Psi(v)`` with components ``fb(v_i, Fhat_i(v))``."""
    v, _, _ = _split(model, v)
    return np.asarray(fb(v, ncp_map(model, v, eps, warm=warm)))


def _field_jacobian(model, x, eps, warm, fd_step):
    # central differences of the leader field, standard (row = output) layout
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        h = fd_step * max(1.0, abs(x[j]))
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (leader_field(model, x + e, eps, warm=warm) - leader_field(model, x - e, eps, warm=warm)) / (2 * h)
    return J


def _psi_jacobian(model, v, Fhat, JF, eps):
    A, _ = model.leader_constraints()
    n, p = model.dims.n, model.dims.p
    JFhat = np.zeros((n + p, n + p))
    JFhat[:n, :n] = JF
    JFhat[:n, n:] = A.T
    JFhat[n:, :n] = -A
    da, db = fb_gradient(v, Fhat, 0.0)
    return np.diag(da) + db[:, None] * JFhat


def ncp_jacobian(model, v, eps, warm=None, fd_step=FD_STEP):
    """An element of the generalized Jacobian of ``Psi`` at ``v``.

    Row i is ``(xi_i - 1) e_i + (eta_i - 1) grad Fhat_i``; the leader-field
    block of ``grad Fhat`` is approximated by central differences with step
    ``fd_step * max(1, |x_j|)`` and the constraint blocks are exact.
    """
    v, x, mu = _split(model, v)
    F, w = leader_field(model, x, eps, warm=warm, return_state=True)
    Fhat = _fhat(model, F, x, mu)
    JF = _field_jacobian(model, x, eps, w, fd_step)
    return _psi_jacobian(model, v, Fhat, JF, eps)


def vi_residual(model, x, F):
    """``||x - P_X(x - F)||_inf`` for ``X = {A x <= b, x >= 0}``."""
    A, b = model.leader_constraints()
    n = model.dims.n
    C = np.vstack([A, -np.eye(n)])
    r = np.concatenate([b, np.zeros(n)])
    return float(np.max(np.abs(x - project_polyhedron(x - F, C, r))))


def solve_leader_ncp(model, eps, v0, warm=None, tol=None, max_iter=MAX_ITER, fd_step=FD_STEP, polish=True):
    """Semismooth Newton method for ``Psi(v) = 0`` at smoothing level ``eps``.

    Stops once ``||min(v, Fhat(v))||_inf < tol`` (default ``(n + p) 1e-6``).
    The Newton direction is replaced by the steepest-descent direction of the
    merit function when the linear system is singular or the direction is not
    a descent direction; a failed Newton line search is retried once along
    the gradient direction. Trial points are projected onto ``v >= 0``.
    With ``polish`` one extra undamped Newton step is taken after the
    stopping test and kept if it does not increase the natural residual.

    Returns
    -------
    LeaderState
        With ``trace`` (one dict per iteration) and ``follower`` (the follower
        state at the returned x) attached.
    """
    if not eps > 0:
        raise ValueError("solve_leader_ncp requires eps > 0")
    tol = stopping_tol(model) if tol is None else tol
    v, _, _ = _split(model, v0)
    v = v.copy()
    n = model.dims.n
    trace = []

    Fhat, w = ncp_map(model, v, eps, warm=warm, return_state=True)
    it = 0
    while True:
        res = natural_residual(v, Fhat)
        if res < tol:
            break
        if it >= max_iter:
            raise MaxIterations(f"leader NCP not solved in {max_iter} iterations (natural residual {res:.3e})",
                                residual=res, state=LeaderState(v[:n], v[n:]))
        psi = np.asarray(fb(v, Fhat))
        merit = 0.5 * psi @ psi
        J = _psi_jacobian(model, v, Fhat, _field_jacobian(model, v[:n], eps, w, fd_step), eps)
        grad = J.T @ psi

        direction = "newton"
        try:
            d = lu_solve_checked(J, -psi)
            if d @ grad > -DESCENT_TOL * np.linalg.norm(d) * np.linalg.norm(grad):
                d, direction = -grad, "gradient"
        except LinearSolveFailure:
            d, direction = -grad, "gradient-singular"

        step = _armijo(model, v, d, grad, merit, eps, w)
        if step is None and direction == "newton":
            d, direction = -grad, "gradient-fallback"
            step = _armijo(model, v, d, grad, merit, eps, w)
        if step is None:
            raise LineSearchFailure(f"no sufficient decrease of the merit function (natural residual {res:.3e})")
        t, v, Fhat, w = step
        it += 1
        trace.append({"iteration": it, "residual": res, "merit": merit, "step": t, "direction": direction})

    if polish and res > 0.0:
        v, Fhat, w = _polish(model, v, Fhat, w, eps, fd_step, res, trace)
    return LeaderState(v[:n].copy(), v[n:].copy(), iterations=it, trace=trace, follower=w)


def _polish(model, v, Fhat, w, eps, fd_step, res, trace):
    # one undamped Newton step past the stopping rule; kept only if the
    # natural residual does not grow
    n = model.dims.n
    try:
        J = _psi_jacobian(model, v, Fhat, _field_jacobian(model, v[:n], eps, w, fd_step), eps)
        trial = np.maximum(v + lu_solve_checked(J, -np.asarray(fb(v, Fhat))), 0.0)
        F_try, w_try = ncp_map(model, trial, eps, warm=w, return_state=True)
    except LinearSolveFailure:
        trace.append({"iteration": len(trace), "residual": res, "merit": None, "step": 0.0,
                      "direction": "polish-singular"})
        return v, Fhat, w
    except SolverError:
        return v, Fhat, w
    if natural_residual(trial, F_try) <= res:
        return trial, F_try, w_try
    return v, Fhat, w


def _armijo(model, v, d, grad, merit, eps, w):
    # projected Armijo search: trial points are clipped to v >= 0, where every
    # NCP solution lies; without it iterates can stall at spurious stationary
    # points of the merit function in the negative orthant
    t = 1.0
    for _ in range(MAX_BACKTRACKS + 1):
        trial = np.maximum(v + t * d, 0.0)
        try:
            Fhat, w_new = ncp_map(model, trial, eps, warm=w, return_state=True)
        except SolverError:
            Fhat = None
        if Fhat is not None:
            psi = np.asarray(fb(trial, Fhat))
            f_new = 0.5 * psi @ psi
            if f_new < merit and f_new <= merit + ARMIJO_SIGMA * float(grad @ (trial - v)):
                return t, trial, Fhat, w_new
        t *= ARMIJO_BETA
    return None
