"""Fischer-Burmeister NCP functions and the natural residual.

All functions broadcast over numpy arrays; scalar inputs give Python floats.
The square roots are evaluated with ``np.hypot`` so that large arguments do
not overflow.
"""
import numpy as np

_SQRT2 = np.sqrt(2.0)
# generalized-gradient element used at the kink (a, b, eps) = (0, 0, 0)
KINK_ELEMENT = 1.0 / _SQRT2


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def _root(a, b, eps):
    # sqrt(a^2 + b^2 + 2 eps^2) without intermediate overflow
    return np.hypot(np.hypot(a, b), _SQRT2 * eps)


def fb(a, b):
    """phi_0(a, b) = sqrt(a^2 + b^2) - (a + b).

    Vanishes exactly when a >= 0, b >= 0 and a * b = 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(np.hypot(a, b) - (a + b))


def fb_smoothed(a, b, eps):
    """phi_eps(a, b) = sqrt(a^2 + b^2 + 2 eps^2) - (a + b).

    For ``eps > 0`` the function is smooth and its zeros with positive
    arguments satisfy ``a * b = eps**2``. ``eps = 0`` gives :func:`fb`.
    """
    if np.any(np.asarray(eps) < 0):
        raise ValueError("smoothing parameter must be nonnegative")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(_root(a, b, eps) - (a + b))


def fb_gradient(a, b, eps=0.0):
    """Partial derivatives of ``fb_smoothed`` with respect to ``a`` and ``b``.

    Where the root vanishes (only possible for ``eps = 0`` at the origin) the
    element ``(1/sqrt(2) - 1, 1/sqrt(2) - 1)`` of the generalized gradient is
    returned.

    Returns
    -------
    da, db : float or ndarray
    """
    if np.any(np.asarray(eps) < 0):
        raise ValueError("smoothing parameter must be nonnegative")
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    r = _root(a, b, eps)
    r = np.broadcast_to(r, a.shape)
    kink = r == 0.0
    safe = np.where(kink, 1.0, r)
    xi = np.where(kink, KINK_ELEMENT, a / safe)
    eta = np.where(kink, KINK_ELEMENT, b / safe)
    return _out(xi - 1.0), _out(eta - 1.0)


def natural_residual(v, F):
    """``max_i |min(v_i, F_i)|``, the infinity norm of the natural map."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    F = np.atleast_1d(np.asarray(F, dtype=float))
    if v.shape != F.shape:
        raise ValueError(f"length mismatch: v has shape {v.shape}, F has shape {F.shape}")
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(np.minimum(v, F))))
