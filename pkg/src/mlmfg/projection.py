"""Euclidean projection onto small polyhedra by active-set enumeration."""
import itertools

import numpy as np


def project_polyhedron(point, C, r, feas_tol=1e-10):
    """Return ``argmin ||y - point||`` subject to ``C y <= r``.

    Every subset of at most ``dim`` constraints with linearly independent
    rows is tried as the active set; the feasible candidate nearest to
    ``point`` is the projection. Cost grows combinatorially, so this is only
    meant for the handful of variables found in desk-scale games.
    """
    point = np.asarray(point, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    r = np.asarray(r, dtype=float)
    dim = point.size
    scale = 1.0 + np.abs(r)
    if np.all(C @ point <= r + feas_tol * scale):
        return point.copy()
    best, best_dist = None, np.inf
    k = C.shape[0]
    for size in range(1, min(dim, k) + 1):
        for S in itertools.combinations(range(k), size):
            CS = C[list(S)]
            gram = CS @ CS.T
            if np.linalg.cond(gram) > 1e12:
                continue
            mult = np.linalg.solve(gram, CS @ point - r[list(S)])
            cand = point - CS.T @ mult
            if np.all(C @ cand <= r + feas_tol * scale):
                dist = float(np.sum((cand - point) ** 2))
                if dist < best_dist:
                    best, best_dist = cand, dist
    if best is None:
        raise ValueError("polyhedron appears to be empty")
    return best
