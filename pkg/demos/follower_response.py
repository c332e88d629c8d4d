"""
The smoothed follower response and its derivative
=================================================

For the scalar follower min 1/2 (y - x)^2 s.t. y >= 0 the smoothed KKT
system has the explicit root y = (x + sqrt(x^2 + 4 eps^2)) / 2. We compare
the Newton solver and the implicit-function derivative with that formula,
then check the 4x4 response Jacobian of the built-in game against central
differences.
"""
import numpy as np

from mlmfg import (GameModel, build_quadratic_model, finite_diff_jacobian, hori_fukushima_ext, response_jacobian,
                   solve_followers)
from mlmfg.model import Dimensions


class Scalar(GameModel):
    dims = Dimensions(n_nu=(1,), m_omega=(1,), l_omega=(1,), p_nu=(1,))

    def follower_field(self, x, y):
        return y - x

    def follower_field_jac_y(self, x, y):
        return np.eye(1)

    def follower_field_jac_x(self, x, y):
        return -np.eye(1)

    def constraints(self, x, y):
        return -y

    def constraint_jac_y(self, x, y):
        return -np.eye(1)

    def constraint_jac_x(self, x, y):
        return np.zeros((1, 1))

    # the leader side is not used here
    def leader_objective(self, nu, x, y):
        return 0.0

    def leader_grad_x(self, nu, x, y):
        return np.zeros(1)

    def leader_grad_y(self, nu, x, y):
        return np.zeros(1)

    def leader_constraints(self):
        return np.eye(1), np.ones(1)


toy = Scalar()
print(f"{'x':>5s} {'eps':>6s} {'y (Newton)':>14s} {'y (formula)':>14s} {'dy/dx':>10s} {'formula':>10s}")
for eps in (1.0, 0.1, 0.01):
    for x in (-2.0, 0.0, 3.0):
        s = solve_followers(toy, [x], eps)
        _, dy = response_jacobian(toy, [x], s, eps)
        root = np.sqrt(x * x + 4 * eps * eps)
        print(f"{x:5.1f} {eps:6.2f} {s.y[0]:14.10f} {(x + root) / 2:14.10f} {dy[0, 0]:10.6f} {(1 + x / root) / 2:10.6f}")

model = build_quadratic_model(hori_fukushima_ext())
x = np.full(4, 3.0)
for eps in (1.0, 0.1, 0.01):
    _, dy = response_jacobian(model, x, solve_followers(model, x, eps), eps)
    fd = finite_diff_jacobian(lambda u: solve_followers(model, u, eps).y, x, 1e-6)
    print(f"eps = {eps:5.2f}: implicit vs finite-difference Jacobian, max difference {np.max(np.abs(dy - fd)):.1e}")
