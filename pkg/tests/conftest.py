import numpy as np
import pytest

from mlmfg.model import Dimensions, GameModel, ProblemInstance, build_quadratic_model, hori_fukushima_ext


class ScalarToy(GameModel):
    """One leader, one follower: follower min 1/2 (y - s x - c0)^2 s.t. y >= 0.

    The leader minimizes ``x + y`` over ``0 <= x <= xmax``. With ``s = 1``,
    ``c0 = 0`` the smoothed response is ``y = (x + sqrt(x^2 + 4 eps^2)) / 2``.
    """

    def __init__(self, s=1.0, c0=0.0, xmax=10.0):
        self.dims = Dimensions(n_nu=(1,), m_omega=(1,), l_omega=(1,), p_nu=(1,))
        self.s, self.c0, self.xmax = s, c0, xmax

    def follower_field(self, x, y):
        return np.array([y[0] - self.s * x[0] - self.c0])

    def follower_field_jac_y(self, x, y):
        return np.array([[1.0]])

    def follower_field_jac_x(self, x, y):
        return np.array([[-self.s]])

    def constraints(self, x, y):
        return np.array([-y[0]])

    def constraint_jac_y(self, x, y):
        return np.array([[-1.0]])

    def constraint_jac_x(self, x, y):
        return np.array([[0.0]])

    def leader_objective(self, nu, x, y):
        return float(x[0] + y[0])

    def leader_grad_x(self, nu, x, y):
        return np.array([1.0])

    def leader_grad_y(self, nu, x, y):
        return np.array([1.0])

    def leader_constraints(self):
        return np.array([[1.0]]), np.array([self.xmax])


def toy_y(x, eps):
    return 0.5 * (x + np.sqrt(x * x + 4 * eps * eps))


def toy_dy(x, eps):
    return 0.5 * (1 + x / np.sqrt(x * x + 4 * eps * eps))


# leader block K x + q with an interior solution; no follower influence (D = 0)
DECOUPLED_K = np.array([
    [4.0, 1.0, 0.5, 0.0],
    [1.0, 3.0, 0.0, 0.5],
    [-0.5, 0.0, 3.0, 0.5],
    [0.0, -0.5, 0.5, 2.0],
])
DECOUPLED_X = np.array([0.2, 0.3, 0.25, 0.1])


def decoupled_instance():
    base = hori_fukushima_ext()
    q = -DECOUPLED_K @ DECOUPLED_X
    zero = np.zeros((2, 2))
    return ProblemInstance(
        dims=base.dims,
        H=(DECOUPLED_K[:2, :2], DECOUPLED_K[2:, 2:]),
        G_cross=(DECOUPLED_K[:2, 2:], DECOUPLED_K[2:, :2]),
        D=((zero, zero), (zero, zero)),
        q=(q[:2], q[2:]),
        A=(np.eye(2), np.eye(2)),
        b=(np.ones(2), np.ones(2)),
        M=base.M, Q_cross=base.Q_cross, c=base.c, d=base.d, a=base.a,
    )


@pytest.fixture
def hf_instance():
    return hori_fukushima_ext()


@pytest.fixture(scope="session")
def hf_model():
    return build_quadratic_model(hori_fukushima_ext())


@pytest.fixture(scope="session")
def decoupled_model():
    return build_quadratic_model(decoupled_instance())


@pytest.fixture
def toy():
    return ScalarToy()


@pytest.fixture(scope="session")
def hf_trajectory(hf_model):
    from mlmfg.homotopy import Schedule, run_homotopy
    return run_homotopy(hf_model, Schedule(), np.full(4, 3.0))


class SingleLeaderQP(ScalarToy):
    """One leader with ``1/2 x'P x + c'x`` over ``x1 + x2 <= 1, x >= 0``; y is ignored."""

    P = np.array([[3.0, 1.0], [1.0, 2.0]])
    c = np.array([-3.0, -3.0])

    def __init__(self):
        self.dims = Dimensions(n_nu=(2,), m_omega=(1,), l_omega=(1,), p_nu=(1,))
        self.s, self.c0 = 1.0, 0.0

    def follower_field_jac_x(self, x, y):
        return np.array([[-1.0], [0.0]])

    def constraint_jac_x(self, x, y):
        return np.zeros((2, 1))

    def leader_objective(self, nu, x, y):
        return float(0.5 * x @ self.P @ x + self.c @ x)

    def leader_grad_x(self, nu, x, y):
        return self.P @ x + self.c

    def leader_grad_y(self, nu, x, y):
        return np.zeros(1)

    def leader_constraints(self):
        return np.array([[1.0, 1.0]]), np.array([1.0])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
