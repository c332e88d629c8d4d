"""Smoothed KKT system of the followers' Nash game and its implicit derivative.

For fixed leader strategies ``x`` the followers' equilibrium is the root
``w = (y, z, lam)`` of::

    H_eps(x, w) = [ G(x, y) + grad_y g(x, y) lam ]
                  [ g(x, y) + z                  ]
                  [ phi_eps(lam_i, z_i), i=1..l  ]

For ``eps > 0`` the root is unique, strictly positive in (z, lam) and
satisfies ``z_i lam_i = eps**2``; it is found by Newton's method.
"""
from dataclasses import dataclass, field

import numpy as np

from ._linalg import lu_solve_checked
from .errors import DimensionError, DivergenceDetected, LineSearchFailure, MaxIterations, SolverError
from .smoothing import fb_gradient, fb_smoothed

ARMIJO_SIGMA = 1e-4
ARMIJO_BETA = 0.5
MIN_STEP = 1e-12
MAX_ITER = 100
TOL_COMP = 1e-8


def default_tol(model):
    dims = model.dims
    return 1e-10 * (dims.m + 2 * dims.l)


@dataclass
class FollowerState:
    y: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    iterations: int = field(default=0, compare=False)
    residual: float = field(default=float("nan"), compare=False)
    history: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)

    @property
    def w(self):
        return np.concatenate([self.y, self.z, self.lam])

    @classmethod
    def from_vector(cls, w, m, l, **kw):
        w = np.asarray(w, dtype=float)
        if w.shape != (m + 2 * l,):
            raise DimensionError(f"follower vector has shape {w.shape}, expected ({m + 2 * l},)")
        return cls(w[:m].copy(), w[m:m + l].copy(), w[m + l:].copy(), **kw)


@dataclass
class KktJacobianBlocks:
    """Blocks of ``grad_w H_eps`` (transposed convention) and ``grad_x H_eps``.

    ``Xi`` and ``Hd`` hold the diagonals of the derivatives of the smoothed
    complementarity rows with respect to z and lam.
    """

    L: np.ndarray
    A: np.ndarray
    Lp: np.ndarray
    Ap: np.ndarray
    Xi: np.ndarray
    Hd: np.ndarray

    def system_matrix(self):
        """``[[L, A, O], [O, I, Xi], [A^T, O, Hd]]``; rows indexed by w."""
        m, l = self.A.shape
        K = np.zeros((m + 2 * l, m + 2 * l))
        K[:m, :m] = self.L
        K[:m, m:m + l] = self.A
        K[m:m + l, m:m + l] = np.eye(l)
        K[m:m + l, m + l:] = np.diag(self.Xi)
        K[m + l:, :m] = self.A.T
        K[m + l:, m + l:] = np.diag(self.Hd)
        return K

    def x_block(self):
        """``[L', A', O]``, shape (n, m + 2l)."""
        n = self.Lp.shape[0]
        l = self.A.shape[1]
        return np.hstack([self.Lp, self.Ap, np.zeros((n, l))])


def _as_state(model, w):
    if isinstance(w, FollowerState):
        return w
    return FollowerState.from_vector(w, model.dims.m, model.dims.l)


def _check_x(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dims.n,):
        raise DimensionError(f"leader vector has shape {x.shape}, expected ({model.dims.n},)")
    return x


def assemble_H(model, x, w, eps):
    """Residual of the smoothed followers' KKT system, shape (m + 2l,)."""
    x = _check_x(model, x)
    s = _as_state(model, w)
    dims = model.dims
    if s.y.shape != (dims.m,) or s.z.shape != (dims.l,) or s.lam.shape != (dims.l,):
        raise DimensionError("follower state does not match the model dimensions")
    stat = model.follower_field(x, s.y) + model.constraint_jac_y(x, s.y) @ s.lam
    feas = model.constraints(x, s.y) + s.z
    comp = np.asarray(fb_smoothed(s.lam, s.z, eps), dtype=float).reshape(dims.l)
    return np.concatenate([stat, feas, comp])


def assemble_jacobians(model, x, w, eps):
    x = _check_x(model, x)
    s = _as_state(model, w)
    y, lam = s.y, s.lam
    d_lam, d_z = fb_gradient(lam, s.z, eps)
    return KktJacobianBlocks(
        L=model.follower_field_jac_y(x, y) + model.constraint_hess_yy(x, y, lam),
        A=model.constraint_jac_y(x, y),
        Lp=model.follower_field_jac_x(x, y) + model.constraint_hess_xy(x, y, lam),
        Ap=model.constraint_jac_x(x, y),
        Xi=np.atleast_1d(np.asarray(d_z, dtype=float)),
        Hd=np.atleast_1d(np.asarray(d_lam, dtype=float)),
    )


def _cold_start(model, x, eps):
    dims = model.dims
    y = np.zeros(dims.m)
    if not np.all(model.constraints(x, y) < 0):
        # unconstrained stationary point of the linearized follower field
        J = model.follower_field_jac_y(x, y).T
        y = lu_solve_checked(J, -model.follower_field(x, y))
    e = max(eps, 1e-300)
    return FollowerState(y, np.full(dims.l, e), np.full(dims.l, e))


def solve_followers(model, x, eps, warm=None, tol=None, max_iter=MAX_ITER):
    """Newton's method with Armijo backtracking on ``1/2 ||H_eps||^2``.

    Parameters
    ----------
    warm : FollowerState, optional
        Starting point; the root does not depend on it.
    tol : float, optional
        Stop when ``||H_eps||_inf <= tol``; defaults to ``1e-10 (m + 2l)``.
        One extra Newton step is attempted afterwards to polish the root.

    Raises
    ------
    MaxIterations, LinearSolveFailure, DivergenceDetected, LineSearchFailure
    """
    if not eps > 0:
        raise ValueError("solve_followers requires eps > 0")
    x = _check_x(model, x)
    dims = model.dims
    m, l = dims.m, dims.l
    tol = default_tol(model) if tol is None else tol
    state = _cold_start(model, x, eps) if warm is None else _as_state(model, warm)
    w = state.w.copy()

    H = assemble_H(model, x, w, eps)
    res = float(np.max(np.abs(H)))
    history = [res]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise MaxIterations(
                f"follower Newton did not converge in {max_iter} iterations (||H||_inf = {res:.3e})",
                residual=res, state=FollowerState.from_vector(w, m, l),
            )
        K = assemble_jacobians(model, x, w, eps).system_matrix()
        d = lu_solve_checked(K.T, -H)
        merit = 0.5 * H @ H
        t = 1.0
        while True:
            w_new = w + t * d
            H_new = assemble_H(model, x, w_new, eps)
            if 0.5 * H_new @ H_new <= (1.0 - 2.0 * ARMIJO_SIGMA * t) * merit:
                break
            t *= ARMIJO_BETA
            if t < MIN_STEP:
                raise LineSearchFailure(f"follower line search failed at ||H||_inf = {res:.3e}")
        w, H = w_new, H_new
        res = float(np.max(np.abs(H)))
        history.append(res)
        it += 1
        if len(history) > 5 and history[-1] > 10.0 * history[-6]:
            raise DivergenceDetected(f"follower residual grew to {res:.3e}", residual=res)

    # polish: quadratic convergence usually takes the residual to roundoff
    if res > 0.0:
        try:
            K = assemble_jacobians(model, x, w, eps).system_matrix()
            w_try = w + lu_solve_checked(K.T, -H)
            H_try = assemble_H(model, x, w_try, eps)
            res_try = float(np.max(np.abs(H_try)))
            if res_try <= res:
                w, res = w_try, res_try
                history.append(res)
        except SolverError:  # the converged iterate is already acceptable
            pass
    return FollowerState.from_vector(w, m, l, iterations=it, residual=res, history=history)


def response_jacobian(model, x, w, eps):
    """Implicit derivative of the smoothed follower response.

    Returns
    -------
    dw : ndarray, shape (n, m + 2l)
        ``grad w_eps(x) = -[L', A', O] K^{-1}`` (transposed convention).
    dy : ndarray, shape (n, m)
        First m columns of ``dw``; ``dy[j, i] = d y_i / d x_j``.
    """
    if not eps > 0:
        raise ValueError("response_jacobian requires eps > 0")
    x = _check_x(model, x)
    blocks = assemble_jacobians(model, x, w, eps)
    K = blocks.system_matrix()
    B = blocks.x_block()
    dw = lu_solve_checked(K.T, -B.T).T
    return dw, dw[:, :model.dims.m]


def comp_product_error(w, eps):
    """``max_i |z_i lam_i - eps^2|``."""
    if w.z.size == 0:
        return 0.0
    return float(np.max(np.abs(w.z * w.lam - eps ** 2)))


@dataclass
class DegeneracyReport:
    J_0plus: tuple
    J_00: tuple
    J_plus0: tuple
    interior: tuple
    ambiguous: tuple
    tol: float

    @property
    def strictly_complementary(self):
        return not self.J_00


def classify_degeneracy(w, tol=None):
    """Split constraint indices (0-based) by which of z_i, lam_i vanish.

    Indices with both components above ``tol`` go to ``interior``; indices
    with a component below ``-tol`` (infeasible sign) go to ``ambiguous``.
    """
    z = np.asarray(w.z, dtype=float)
    lam = np.asarray(w.lam, dtype=float)
    if tol is None:
        scale = float(np.max(np.abs(np.concatenate([z, lam])))) if z.size else 0.0
        tol = 1e-6 * max(1.0, scale)
    sets = {"J_0plus": [], "J_00": [], "J_plus0": [], "interior": [], "ambiguous": []}
    for i, (zi, li) in enumerate(zip(z, lam)):
        if zi < -tol or li < -tol:
            sets["ambiguous"].append(i)
        elif zi <= tol and li <= tol:
            sets["J_00"].append(i)
        elif zi <= tol:
            sets["J_0plus"].append(i)
        elif li <= tol:
            sets["J_plus0"].append(i)
        else:
            sets["interior"].append(i)
    return DegeneracyReport(tol=tol, **{k: tuple(v) for k, v in sets.items()})
