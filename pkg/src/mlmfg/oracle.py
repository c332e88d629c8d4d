"""Independent reference computations used to cross-check the main solvers.

Nothing here shares code paths with the Newton solvers beyond the model
evaluations: follower equilibria come from Gauss-Seidel best-response
sweeps, leader equilibria from alternating projected-gradient descent on
each leader's reduced objective. Slow by design.
"""
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import CyclingDetected, NoConvergence, SolverError
from .follower import solve_followers
from .projection import project_polyhedron
from .smoothing import fb_smoothed


@dataclass(frozen=True)
class OracleConfig:
    fd_step: float = 1e-5
    fp_tol: float = 1e-10
    fp_max_sweeps: int = 500
    pg_step: float = 0.0  # 0 selects 1 / (estimated Lipschitz constant)
    pg_tol: float = 1e-8
    pg_max_iters: int = 20000

    def __post_init__(self):
        if not 1e-8 <= self.fd_step <= 1e-3:
            raise ValueError("fd_step must lie in [1e-8, 1e-3]")
        for name in ("fp_tol", "pg_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.fp_max_sweeps < 1 or self.pg_max_iters < 1 or self.pg_step < 0:
            raise ValueError("iteration limits must be positive")


class EvaluationError(SolverError):
    def __init__(self, message, coordinate):
        super().__init__(message)
        self.coordinate = coordinate


def finite_diff_jacobian(f, x, fd_step=1e-5):
    """Central-difference Jacobian in the transposed convention.

    Row ``j`` holds ``(f(x + h_j e_j) - f(x - h_j e_j)) / (2 h_j)`` with
    ``h_j = fd_step * max(1, |x_j|)``, so the result has shape
    ``(len(x), len(f(x)))``.
    """
    x = np.asarray(x, dtype=float)
    rows = []
    for j in range(x.size):
        h = fd_step * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        try:
            fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
            fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        except Exception as exc:
            raise EvaluationError(f"evaluation failed when perturbing coordinate {j}: {exc}", j) from exc
        rows.append((fp - fm) / (2 * h))
    return np.array(rows)


# --- followers ------------------------------------------------------------------

def _block_polyhedron(model, x, y, w):
    # g^w is affine in y^w for the models this oracle supports:
    # g^w(x, y^w) = g^w(x, 0) + C y^w
    dims = model.dims
    sw, sc = dims.follower_slices()[w], dims.constraint_slices()[w]
    y0 = y.copy()
    y0[sw] = 0.0
    C = model.constraint_jac_y(x, y0)[sw, sc].T
    r = -model.constraints(x, y0)[sc]
    return C, r


def _block_pg(model, x, y, w, cfg):
    sw = model.dims.follower_slices()[w]
    C, r = _block_polyhedron(model, x, y, w)

    def grad(yw):
        full = y.copy()
        full[sw] = yw
        return model.follower_field(x, full)[sw]

    yw = y[sw].copy()
    if cfg.pg_step > 0:
        step = cfg.pg_step
    else:
        jac = finite_diff_jacobian(grad, yw, cfg.fd_step)
        step = 1.0 / max(np.linalg.norm(jac, 2), 1e-12)
    last = np.inf
    for _ in range(cfg.pg_max_iters):
        new = project_polyhedron(yw - step * grad(yw), C, r)
        change = float(np.max(np.abs(new - yw)))
        yw = new
        if change <= 1e-2 * cfg.fp_tol:
            return yw
        if change > last:
            step *= 0.5
        last = change
    raise NoConvergence(f"projected gradient for follower {w} did not converge")


def _block_smoothed(model, x, y, w, eps, cfg):
    dims = model.dims
    sw, sc = dims.follower_slices()[w], dims.constraint_slices()[w]
    mw, lw = sw.stop - sw.start, sc.stop - sc.start

    def residual(u):
        full = y.copy()
        full[sw] = u[:mw]
        z, lam = u[mw:mw + lw], u[mw + lw:]
        stat = model.follower_field(x, full)[sw] + model.constraint_jac_y(x, full)[sw, sc] @ lam
        feas = model.constraints(x, full)[sc] + z
        return np.concatenate([stat, feas, fb_smoothed(lam, z, eps) * np.ones(lw)])

    start = np.concatenate([y[sw], np.full(2 * lw, eps)])
    sol = optimize.root(residual, start, method="hybr", options={"xtol": 1e-13})
    # hybr may report stagnation at roundoff level; judge by the residual
    if np.max(np.abs(residual(sol.x))) > 1e-10:
        raise NoConvergence(f"smoothed KKT solve for follower {w} failed: {sol.message}")
    return sol.x[:mw]


def best_response_fixed_point(model, x, eps=0.0, cfg=None, order=None, y0=None):
    """Followers' equilibrium by Gauss-Seidel best-response sweeps.

    Each follower's block is solved with the others held fixed: by projected
    gradient on its own feasible set when ``eps == 0``, by a root solve of its
    smoothed KKT subsystem when ``eps > 0``. Sweeps stop when the iterate
    moves less than ``cfg.fp_tol``.

    Raises
    ------
    NoConvergence
    """
    cfg = cfg or OracleConfig()
    x = np.asarray(x, dtype=float)
    dims = model.dims
    order = list(range(dims.n_followers)) if order is None else list(order)
    y = np.zeros(dims.m) if y0 is None else np.array(y0, dtype=float)
    fsl = dims.follower_slices()
    for _ in range(cfg.fp_max_sweeps):
        prev = y.copy()
        for w in order:
            if eps == 0:
                y[fsl[w]] = _block_pg(model, x, y, w, cfg)
            else:
                y[fsl[w]] = _block_smoothed(model, x, y, w, eps, cfg)
        if np.max(np.abs(y - prev)) <= cfg.fp_tol:
            return y
    raise NoConvergence(f"best-response sweeps did not converge in {cfg.fp_max_sweeps} sweeps")


# --- leaders --------------------------------------------------------------------

class _ReducedObjectives:
    """theta^nu(x, y_eps(x)) with a warm-started follower solve."""

    def __init__(self, model, eps):
        self.model, self.eps = model, eps
        self.warm = None

    def __call__(self, nu, x):
        w = solve_followers(self.model, x, self.eps, warm=self.warm)
        self.warm = w
        return self.model.leader_objective(nu, x, w.y)


def _leader_polyhedron(model, nu):
    dims = model.dims
    A, b = model.leader_constraints()
    sp, sn = dims.leader_row_slices()[nu], dims.leader_slices()[nu]
    An = A[sp, sn]
    nn = An.shape[1]
    return np.vstack([An, -np.eye(nn)]), np.concatenate([b[sp], np.zeros(nn)])


def leader_oracle_equilibrium(model, eps, x0, cfg=None, return_info=False):
    """Stationary Nash equilibrium of the smoothed leader game.

    Cycles over the leaders; each takes one projected-gradient step on its
    reduced objective ``theta^nu(x, y_eps(x))`` in its own block, with the
    gradient from central differences through the follower solve. The step
    starts at ``1 / Lambda`` (``Lambda`` a finite-difference estimate of the
    block Hessian norm) and is halved whenever the objective fails to
    decrease.

    Raises
    ------
    NoConvergence, CyclingDetected
    """
    if not eps > 0:
        raise ValueError("leader oracle requires eps > 0")
    cfg = cfg or OracleConfig()
    dims = model.dims
    lsl = dims.leader_slices()
    theta = _ReducedObjectives(model, eps)
    polys = [_leader_polyhedron(model, nu) for nu in range(dims.n_leaders)]
    x = np.asarray(x0, dtype=float).copy()
    for nu, s in enumerate(lsl):
        x[s] = project_polyhedron(x[s], *polys[nu])

    def block_grad(nu, x):
        s = lsl[nu]

        def f(xn):
            full = x.copy()
            full[s] = xn
            return theta(nu, full)

        return finite_diff_jacobian(f, x[s], cfg.fd_step)[:, 0]

    steps = []
    for nu, s in enumerate(lsl):
        if cfg.pg_step > 0:
            steps.append(cfg.pg_step)
            continue
        hess = finite_diff_jacobian(lambda xn, nu=nu, s=s: block_grad(nu, _with(x, s, xn)), x[s], 1e-4)
        steps.append(1.0 / max(np.linalg.norm(hess, 2), 1e-8))

    changes = []
    for it in range(cfg.pg_max_iters):
        prev = x.copy()
        for nu, s in enumerate(lsl):
            g = block_grad(nu, x)
            f0 = theta(nu, x)
            while True:
                cand = _with(x, s, project_polyhedron(x[s] - steps[nu] * g, *polys[nu]))
                if theta(nu, cand) <= f0 + 1e-15 * (1 + abs(f0)) or steps[nu] < 1e-12:
                    break
                steps[nu] *= 0.5
            x = cand
        change = float(np.max(np.abs(x - prev)))
        changes.append(change)
        if change <= cfg.pg_tol:
            residuals = [
                float(np.max(np.abs(x[s] - project_polyhedron(x[s] - block_grad(nu, x), *polys[nu]))))
                for nu, s in enumerate(lsl)
            ]
            if max(residuals) <= 10 * cfg.pg_tol:
                return (x, {"iterations": it + 1, "residuals": residuals, "steps": steps}) if return_info else x
        if len(changes) >= 100 and min(changes[-50:]) >= min(changes[-100:-50]):
            raise CyclingDetected(f"leader oracle stalled: joint change {change:.3e} not decaying over 50 cycles")
    raise NoConvergence(f"leader oracle did not converge in {cfg.pg_max_iters} cycles")


def _with(x, s, block):
    out = x.copy()
    out[s] = block
    return out
