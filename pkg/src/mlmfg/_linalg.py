import warnings

import numpy as np
from scipy import linalg

from .errors import LinearSolveFailure

# relative pivot size below which a dense LU factorization is treated as singular
PIVOT_RTOL = 1e-14


def lu_solve_checked(matrix, rhs):
    """Solve ``matrix @ x = rhs`` by LU with partial pivoting.

    Raises LinearSolveFailure instead of returning garbage when a pivot
    vanishes relative to the largest one.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)) or not np.all(np.isfinite(rhs)):
        raise LinearSolveFailure("non-finite entries in linear system")
    with warnings.catch_warnings():
        # exact zero pivots are reported through LinearSolveFailure below
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = pivots.max() if pivots.size else 0.0
    if scale == 0.0 or pivots.min() <= PIVOT_RTOL * scale:
        raise LinearSolveFailure(
            f"singular system matrix (min pivot {pivots.min():.3e}, max pivot {scale:.3e})"
        )
    return linalg.lu_solve((lu, piv), rhs, check_finite=False)
