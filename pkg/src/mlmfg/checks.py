"""Cross-validation suite run by ``mlmfg check``.

Each check returns a :class:`CheckResult`; thresholds are fixed here so that
a change of random seed does not change the verdict.
"""
from dataclasses import dataclass

import numpy as np

from .follower import (TOL_COMP, assemble_H, comp_product_error, default_tol, response_jacobian,
                       solve_followers)
from .homotopy import run_homotopy
from .leader import stopping_tol, vi_residual, leader_field
from .oracle import OracleConfig, best_response_fixed_point, finite_diff_jacobian, leader_oracle_equilibrium


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} {self.value:11.3e} <= {self.threshold:9.1e}  {self.detail}"


def rel_err(a, b):
    """``max|a - b| / max(1, max|b|)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def sample_x(model, rng, count, high=3.0):
    return rng.uniform(0.0, high, size=(count, model.dims.n))


def check_follower_consistency(model, rng, count=100, eps=1.0):
    worst = 0.0
    for x in sample_x(model, rng, count):
        w = solve_followers(model, x, eps)
        worst = max(worst, float(np.max(np.abs(assemble_H(model, x, w, eps)))))
    tol = default_tol(model)
    return CheckResult("follower KKT residual at random x", worst <= tol, worst, tol, f"{count} points, eps={eps}")


def check_comp_product(model, rng, count=20, eps_values=(1.0, 0.1, 0.01, 1e-3)):
    worst = 0.0
    for eps in eps_values:
        for x in sample_x(model, rng, count):
            w = solve_followers(model, x, eps)
            worst = max(worst, comp_product_error(w, eps) / max(1.0, eps ** 2))
    return CheckResult("complementarity product z*lam = eps^2", worst <= TOL_COMP, worst, TOL_COMP)


def follower_y(model, eps):
    return lambda x: solve_followers(model, x, eps).y


def check_response_jacobian(model, rng, count=5, eps_values=(1.0, 0.1, 0.01), fd_step=1e-6, tol=1e-5):
    worst = 0.0
    for eps in eps_values:
        for x in sample_x(model, rng, count):
            w = solve_followers(model, x, eps)
            _, dy = response_jacobian(model, x, w, eps)
            worst = max(worst, rel_err(dy, finite_diff_jacobian(follower_y(model, eps), x, fd_step)))
    return CheckResult("implicit response Jacobian vs FD", worst <= tol, worst, tol, f"eps in {list(eps_values)}")


def check_follower_oracle(model, rng, count=20, tol=1e-3):
    worst = 0.0
    for x in sample_x(model, rng, count):
        worst = max(worst, float(np.max(np.abs(
            solve_followers(model, x, 1e-5).y - best_response_fixed_point(model, x, 0.0)))))
    return CheckResult("Newton (eps=1e-5) vs best-response (eps=0)", worst <= tol, worst, tol, f"{count} points")


def check_sweep_order(model, rng, count=5):
    cfg = OracleConfig()
    worst = 0.0
    rev = list(range(model.dims.n_followers))[::-1]
    for x in sample_x(model, rng, count):
        worst = max(worst, float(np.max(np.abs(
            best_response_fixed_point(model, x, 0.0, cfg) - best_response_fixed_point(model, x, 0.0, cfg, order=rev)))))
    return CheckResult("best-response sweep-order independence", worst <= 10 * cfg.fp_tol, worst, 10 * cfg.fp_tol)


def check_homotopy(model, schedule, x0, trajectory=None):
    """Per-record stopping criterion, VI residual and eps-product law."""
    traj = trajectory if trajectory is not None else run_homotopy(model, schedule, x0)
    tol = stopping_tol(model)
    ncp = max(r.ncp_residual for r in traj.records)
    vi = max(r.vi_residual for r in traj.records)
    comp = max(r.follower_comp_error / max(1.0, r.eps ** 2) for r in traj.records)
    singular = sum(r.singular_solves for r in traj.records)
    return traj, [
        CheckResult("leader stopping criterion on every record", ncp < tol, ncp, tol, f"{len(traj)} records"),
        CheckResult("KKT => VI projection residual", vi <= 1e-5, vi, 1e-5),
        CheckResult("eps-product law along the path", comp <= TOL_COMP, comp, TOL_COMP),
        CheckResult("semismooth Newton singular solves", singular == 0, float(singular), 0.0),
    ]


def check_leader_oracle(model, trajectory, x0, tol=1e-3):
    last = trajectory.records[-1]
    xo = leader_oracle_equilibrium(model, last.eps, x0, OracleConfig(fd_step=1e-6))
    diff = float(np.max(np.abs(xo - last.x)))
    return CheckResult("leader oracle vs homotopy final x", diff <= tol, diff, tol, f"eps={last.eps:.3e}")


def check_stopping_recomputed(model, trajectory):
    """Re-evaluate the natural residual at each record from a cold follower solve."""
    A, b = model.leader_constraints()
    worst = 0.0
    for r in trajectory.records:
        F = leader_field(model, r.x, r.eps)
        fhat = np.concatenate([F + A.T @ r.mu, b - A @ r.x])
        worst = max(worst, float(np.max(np.abs(np.minimum(np.concatenate([r.x, r.mu]), fhat)))))
    tol = stopping_tol(model)
    return CheckResult("stopping criterion re-evaluated from scratch", worst < tol, worst, tol)


def run_all(model, schedule, x0, seed=0):
    rng = np.random.default_rng(seed)
    results = [
        check_follower_consistency(model, rng),
        check_comp_product(model, rng),
        check_response_jacobian(model, rng),
        check_follower_oracle(model, rng),
        check_sweep_order(model, rng),
    ]
    traj, hom = check_homotopy(model, schedule, x0)
    results += hom
    results.append(check_stopping_recomputed(model, traj))
    results.append(check_leader_oracle(model, traj, x0))
    return results
