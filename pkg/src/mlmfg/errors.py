"""Exception hierarchy shared by the solvers."""


class SolverError(RuntimeError):
    """Base class for every numerical failure raised by this package."""


class DimensionError(ValueError):
    """Array shapes do not agree with the declared game dimensions."""


class InstanceFormatError(ValueError):
    """An instance file could not be parsed or does not follow the schema."""


class MaxIterations(SolverError):
    def __init__(self, message, residual=None, state=None):
        super().__init__(message)
        self.residual = residual
        self.state = state


class LinearSolveFailure(SolverError):
    """A Newton system matrix was numerically singular."""


class DivergenceDetected(SolverError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LineSearchFailure(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class CyclingDetected(SolverError):
    pass


class SolverFailureAt(SolverError):
    """Homotopy step ``k`` failed; the records computed so far are kept."""

    def __init__(self, k, eps, trajectory, cause):
        super().__init__(f"solver failure at homotopy step k={k} (eps={eps:.6g}): {cause}")
        self.k = k
        self.eps = eps
        self.trajectory = trajectory
        self.cause = cause
