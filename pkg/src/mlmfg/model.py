"""Game data, the evaluation interface used by the solvers, and instance I/O.

Conventions
-----------
* Follower constraints are written ``g(x, y) <= 0``.
* Derivatives use the *transposed* Jacobian convention: ``grad F`` has one
  column per output component, so ``follower_field_jac_y`` is ``(m, m)`` with
  ``[i, j] = dG_j / dy_i``.
"""
import abc
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, InstanceFormatError

SCHEMA_VERSION = 1
SYMMETRY_TOL = 1e-12
PD_TOL = 1e-10


@dataclass(frozen=True)
class Dimensions:
    """Block sizes of a game with N leaders and M followers."""

    n_nu: tuple
    m_omega: tuple
    l_omega: tuple
    p_nu: tuple

    def __post_init__(self):
        for name in ("n_nu", "m_omega", "l_omega", "p_nu"):
            vals = tuple(int(v) for v in getattr(self, name))
            if not vals:
                raise DimensionError(f"{name} must be nonempty")
            if any(v <= 0 for v in vals):
                raise DimensionError(f"{name} entries must be strictly positive, got {vals}")
            object.__setattr__(self, name, vals)
        if len(self.p_nu) != len(self.n_nu):
            raise DimensionError("p_nu must have one entry per leader")
        if len(self.l_omega) != len(self.m_omega):
            raise DimensionError("l_omega must have one entry per follower")

    @property
    def n_leaders(self):
        return len(self.n_nu)

    @property
    def n_followers(self):
        return len(self.m_omega)

    @property
    def n(self):
        return sum(self.n_nu)

    @property
    def m(self):
        return sum(self.m_omega)

    @property
    def l(self):  # noqa: E743
        return sum(self.l_omega)

    @property
    def p(self):
        return sum(self.p_nu)

    def leader_slices(self):
        return _slices(self.n_nu)

    def follower_slices(self):
        return _slices(self.m_omega)

    def constraint_slices(self):
        return _slices(self.l_omega)

    def leader_row_slices(self):
        return _slices(self.p_nu)


def _slices(sizes):
    out, start = [], 0
    for s in sizes:
        out.append(slice(start, start + s))
        start += s
    return out


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Data of the quadratic multi-leader multi-follower game.

    Leader ``nu`` minimizes over ``A[nu] x^nu <= b[nu], x^nu >= 0``::

        1/2 x'H x + x'G_cross x^{-nu} + sum_w x'D[nu][w] y^w + q'x

    and follower ``w`` minimizes over ``c'y + sum_nu d[nu]'x^nu + a >= 0,
    y >= 0``::

        1/2 y'M y + y'Q_cross y^{-w} - sum_nu (x^nu)'D[nu][w] y

    ``G_cross[nu]`` multiplies the other leaders' strategies stacked in
    leader order; ``Q_cross[w]`` likewise for the other followers.
    Arrays are stored read-only; no shape checking happens here (see
    :func:`validate_instance`).
    """

    dims: Dimensions
    H: tuple
    G_cross: tuple
    D: tuple
    q: tuple
    A: tuple
    b: tuple
    M: tuple
    Q_cross: tuple
    c: tuple
    d: tuple
    a: tuple

    def __post_init__(self):
        for name in ("H", "G_cross", "q", "A", "b", "M", "Q_cross", "c", "d"):
            object.__setattr__(self, name, tuple(_frozen(v) for v in getattr(self, name)))
        object.__setattr__(self, "D", tuple(tuple(_frozen(v) for v in row) for row in self.D))
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        if self.dims != other.dims or self.a != other.a:
            return False
        for name in ("H", "G_cross", "q", "A", "b", "M", "Q_cross", "c", "d"):
            mine, theirs = getattr(self, name), getattr(other, name)
            if len(mine) != len(theirs):
                return False
            if not all(np.array_equal(u, v) for u, v in zip(mine, theirs)):
                return False
        if len(self.D) != len(other.D):
            return False
        return all(
            len(r1) == len(r2) and all(np.array_equal(u, v) for u, v in zip(r1, r2))
            for r1, r2 in zip(self.D, other.D)
        )

    __hash__ = None

    def follower_block_matrix(self):
        """Jacobian of the follower field in y (rows follow G's components)."""
        dims = self.dims
        sl = dims.follower_slices()
        out = np.zeros((dims.m, dims.m))
        for w, s in enumerate(sl):
            out[s, s] = self.M[w]
            others = [sl[o] for o in range(dims.n_followers) if o != w]
            col = 0
            for so in others:
                width = so.stop - so.start
                out[s, so] = self.Q_cross[w][:, col:col + width]
                col += width
        return out


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    min_eigenvalue: float = float("nan")

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return f"instance valid (smallest eigenvalue of symmetric follower block {self.min_eigenvalue:.6g})"
        return "instance invalid:\n" + "\n".join(f"  - {v}" for v in self.violations)


def _shape_violations(inst):
    dims = inst.dims
    n, m = dims.n, dims.m
    expected = []
    for nu, (nn, pp) in enumerate(zip(dims.n_nu, dims.p_nu)):
        expected += [
            (f"H[{nu}]", inst.H, nu, (nn, nn)),
            (f"G_cross[{nu}]", inst.G_cross, nu, (nn, n - nn)),
            (f"q[{nu}]", inst.q, nu, (nn,)),
            (f"A[{nu}]", inst.A, nu, (pp, nn)),
            (f"b[{nu}]", inst.b, nu, (pp,)),
            (f"d[{nu}]", inst.d, nu, (nn,)),
        ]
    for w, mm in enumerate(dims.m_omega):
        expected += [
            (f"M[{w}]", inst.M, w, (mm, mm)),
            (f"Q_cross[{w}]", inst.Q_cross, w, (mm, m - mm)),
            (f"c[{w}]", inst.c, w, (mm,)),
        ]
    out = []
    counts = {
        "H": dims.n_leaders, "G_cross": dims.n_leaders, "q": dims.n_leaders,
        "A": dims.n_leaders, "b": dims.n_leaders, "d": dims.n_leaders, "D": dims.n_leaders,
        "M": dims.n_followers, "Q_cross": dims.n_followers, "c": dims.n_followers,
        "a": dims.n_followers,
    }
    for name, count in counts.items():
        if len(getattr(inst, name)) != count:
            out.append(f"dimension mismatch: {name} has {len(getattr(inst, name))} blocks, expected {count}")
    if out:
        return out
    for label, seq, idx, shape in expected:
        if seq[idx].shape != shape:
            out.append(f"dimension mismatch: {label} has shape {seq[idx].shape}, expected {shape}")
    for nu, nn in enumerate(dims.n_nu):
        if len(inst.D[nu]) != dims.n_followers:
            out.append(f"dimension mismatch: D[{nu}] has {len(inst.D[nu])} blocks, expected {dims.n_followers}")
            continue
        for w, mm in enumerate(dims.m_omega):
            if inst.D[nu][w].shape != (nn, mm):
                out.append(f"dimension mismatch: D[{nu}][{w}] has shape {inst.D[nu][w].shape}, expected {(nn, mm)}")
    for w, (mm, ll) in enumerate(zip(dims.m_omega, dims.l_omega)):
        if ll != mm + 1:
            out.append(f"dimension mismatch: l_omega[{w}] = {ll}, quadratic followers need m_omega + 1 = {mm + 1}")
    return out


def validate_instance(inst):
    """Check shapes, symmetry of each ``M[w]`` and positive definiteness.

    Never raises; the returned report lists every violation found.
    """
    report = ValidationReport()
    report.violations += _shape_violations(inst)
    if report.violations:
        return report
    for w, Mw in enumerate(inst.M):
        asym = float(np.max(np.abs(Mw - Mw.T))) if Mw.size else 0.0
        if asym > SYMMETRY_TOL:
            report.violations.append(f"M[{w}] not symmetric (max |M - M^T| = {asym:.3e})")
    arrays = list(inst.H) + list(inst.G_cross) + list(inst.q) + list(inst.A) + list(inst.b)
    arrays += list(inst.M) + list(inst.Q_cross) + list(inst.c) + list(inst.d)
    arrays += [blk for row in inst.D for blk in row]
    if not all(np.all(np.isfinite(x)) for x in arrays) or not np.all(np.isfinite(inst.a)):
        report.violations.append("non-finite entries in instance data")
        return report
    big = inst.follower_block_matrix()
    lam_min = float(np.linalg.eigvalsh(0.5 * (big + big.T)).min())
    report.min_eigenvalue = lam_min
    if lam_min <= PD_TOL:
        report.violations.append(
            f"follower block matrix not positive definite (smallest eigenvalue of symmetric part {lam_min:.6g})"
        )
    return report


class GameModel(abc.ABC):
    """Evaluation interface of a smooth multi-leader multi-follower game.

    ``x`` is the stacked leader vector (length n), ``y`` the stacked follower
    vector (length m). Constraint index blocks follow the follower order and
    ``g^w`` may depend on ``x`` and ``y^w`` only.
    """

    dims: Dimensions

    @abc.abstractmethod
    def follower_field(self, x, y):
        """Stacked follower gradients ``G(x, y)``, shape (m,)."""

    @abc.abstractmethod
    def follower_field_jac_y(self, x, y):
        """``grad_y G``, shape (m, m)."""

    @abc.abstractmethod
    def follower_field_jac_x(self, x, y):
        """``grad_x G``, shape (n, m)."""

    @abc.abstractmethod
    def constraints(self, x, y):
        """``g(x, y)``, shape (l,)."""

    @abc.abstractmethod
    def constraint_jac_y(self, x, y):
        """``grad_y g``, shape (m, l)."""

    @abc.abstractmethod
    def constraint_jac_x(self, x, y):
        """``grad_x g``, shape (n, l)."""

    def constraint_hess_yy(self, x, y, lam):
        """``sum_i lam_i grad^2_yy g_i``, shape (m, m). Zero for affine g."""
        return np.zeros((self.dims.m, self.dims.m))

    def constraint_hess_xy(self, x, y, lam):
        """``sum_i lam_i grad^2_xy g_i``, shape (n, m). Zero for affine g."""
        return np.zeros((self.dims.n, self.dims.m))

    @abc.abstractmethod
    def leader_objective(self, nu, x, y):
        """``theta^nu(x, y)``."""

    @abc.abstractmethod
    def leader_grad_x(self, nu, x, y):
        """``grad_{x^nu} theta^nu``, shape (n_nu,)."""

    @abc.abstractmethod
    def leader_grad_y(self, nu, x, y):
        """``grad_y theta^nu``, shape (m,)."""

    @abc.abstractmethod
    def leader_constraints(self):
        """``(A, b)`` with ``X = {x | A x <= b, x >= 0}``; A is block diagonal."""


class QuadraticGameModel(GameModel):
    """Exact evaluations of the quadratic game described by a ProblemInstance."""

    def __init__(self, inst):
        self.instance = inst
        dims = self.dims = inst.dims
        n, m, l = dims.n, dims.m, dims.l
        lsl, fsl, csl = dims.leader_slices(), dims.follower_slices(), dims.constraint_slices()

        self._Gy = inst.follower_block_matrix()  # dG/dy
        self._Gx = np.zeros((m, n))  # dG/dx
        for nu, sn in enumerate(lsl):
            for w, sw in enumerate(fsl):
                self._Gx[sw, sn] = -inst.D[nu][w].T

        self._gy = np.zeros((l, m))
        self._gx = np.zeros((l, n))
        self._g0 = np.zeros(l)
        d_all = np.concatenate(inst.d)
        for w, (sw, sc) in enumerate(zip(fsl, csl)):
            row = sc.start
            self._gy[row, sw] = -inst.c[w]
            self._gx[row, :] = -d_all
            self._g0[row] = -inst.a[w]
            mm = sw.stop - sw.start
            self._gy[row + 1:row + 1 + mm, sw] = -np.eye(mm)

        self._Hsym = [0.5 * (Hn + Hn.T) for Hn in inst.H]
        self._Dfull = [np.hstack(inst.D[nu]) for nu in range(dims.n_leaders)]
        self._others = []
        for nu in range(dims.n_leaders):
            idx = np.concatenate([np.arange(n)[s] for o, s in enumerate(lsl) if o != nu] or [np.zeros(0, int)])
            self._others.append(idx.astype(int))
        self._A = np.zeros((dims.p, n))
        for nu, (sp, sn) in enumerate(zip(dims.leader_row_slices(), lsl)):
            self._A[sp, sn] = inst.A[nu]
        self._b = np.concatenate(inst.b)
        for arr in (self._Gy, self._Gx, self._gy, self._gx, self._g0, self._A, self._b):
            arr.setflags(write=False)

    def follower_field(self, x, y):
        return self._Gy @ y + self._Gx @ x

    def follower_field_jac_y(self, x, y):
        return self._Gy.T.copy()

    def follower_field_jac_x(self, x, y):
        return self._Gx.T.copy()

    def constraints(self, x, y):
        return self._gy @ y + self._gx @ x + self._g0

    def constraint_jac_y(self, x, y):
        return self._gy.T.copy()

    def constraint_jac_x(self, x, y):
        return self._gx.T.copy()

    def _split(self, nu, x):
        s = self.dims.leader_slices()[nu]
        return x[s], x[self._others[nu]]

    def leader_objective(self, nu, x, y):
        inst = self.instance
        xn, xo = self._split(nu, x)
        return float(
            0.5 * xn @ inst.H[nu] @ xn + xn @ inst.G_cross[nu] @ xo
            + xn @ self._Dfull[nu] @ y + inst.q[nu] @ xn
        )

    def leader_grad_x(self, nu, x, y):
        inst = self.instance
        xn, xo = self._split(nu, x)
        return self._Hsym[nu] @ xn + inst.G_cross[nu] @ xo + self._Dfull[nu] @ y + inst.q[nu]

    def leader_grad_y(self, nu, x, y):
        xn, _ = self._split(nu, x)
        return self._Dfull[nu].T @ xn

    def leader_constraints(self):
        return self._A.copy(), self._b.copy()


def build_quadratic_model(inst):
    """Return a :class:`QuadraticGameModel`, rejecting malformed shapes."""
    problems = _shape_violations(inst)
    if problems:
        raise DimensionError("; ".join(problems))
    return QuadraticGameModel(inst)


# --- built-in instances ------------------------------------------------------

def hori_fukushima_ext():
    """Two-leader two-follower quadratic game with nonnegative leader strategies."""
    G12 = np.array([[2.0, -1.0], [2.0, 2.0]])
    Q12 = np.array([[1.0, 1.0], [1.0, 2.0]])
    return ProblemInstance(
        dims=Dimensions(n_nu=(2, 2), m_omega=(2, 2), l_omega=(3, 3), p_nu=(2, 2)),
        H=(np.array([[3.0, -4.0], [-4.0, 2.0]]), np.array([[4.0, -5.0], [-5.0, -3.0]])),
        G_cross=(G12, -G12.T),
        D=(
            (np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([[1.0, 2.0], [1.0, 1.0]])),
            (np.array([[2.0, 1.0], [1.0, 1.0]]), np.array([[2.0, 1.0], [1.0, 2.0]])),
        ),
        q=(np.array([-6.0, -6.0]), np.array([-6.0, -6.0])),
        A=(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([[1.0, 2.0], [2.0, 1.0]])),
        b=(np.array([3.0, 1.0]), np.array([3.0, 1.0])),
        M=(np.array([[3.0, 1.0], [1.0, 3.0]]), np.array([[2.0, 1.0], [1.0, 3.0]])),
        Q_cross=(Q12, -Q12.T),
        c=(np.array([-1.0, -1.0]), np.array([-1.0, -1.0])),
        d=(np.array([1.0, 1.0]), np.array([1.0, 1.0])),
        a=(4.0, 4.0),
    )


BUILTINS = {"hori-fukushima-ext": hori_fukushima_ext}


def builtin_instance(name):
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin instance {name!r}; available: {sorted(BUILTINS)}") from None


# --- instance files -----------------------------------------------------------

_TOP_KEYS = ("version", "dims", "leaders", "followers", "coupling")
_DIM_KEYS = ("n_nu", "m_omega", "l_omega", "p_nu")
_LEADER_KEYS = ("H", "G_cross", "D", "q", "A", "b")
_FOLLOWER_KEYS = ("M", "Q_cross", "c", "a")


def _tolist(arr):
    return np.asarray(arr).tolist()


def instance_to_dict(inst):
    dims = inst.dims
    return {
        "version": SCHEMA_VERSION,
        "dims": {k: list(getattr(dims, k)) for k in _DIM_KEYS},
        "leaders": [
            {
                "H": _tolist(inst.H[nu]),
                "G_cross": _tolist(inst.G_cross[nu]),
                "D": [_tolist(blk) for blk in inst.D[nu]],
                "q": _tolist(inst.q[nu]),
                "A": _tolist(inst.A[nu]),
                "b": _tolist(inst.b[nu]),
            }
            for nu in range(len(inst.H))
        ],
        "followers": [
            {
                "M": _tolist(inst.M[w]),
                "Q_cross": _tolist(inst.Q_cross[w]),
                "c": _tolist(inst.c[w]),
                "a": inst.a[w],
            }
            for w in range(len(inst.M))
        ],
        "coupling": [_tolist(dv) for dv in inst.d],
    }


def save_instance(inst, path):
    """Write ``inst`` as JSON. Floats use shortest round-trip repr, so
    ``load_instance(save_instance(inst))`` reproduces every bit."""
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _warn_unknown(obj, known, where):
    for key in obj:
        if key not in known:
            warnings.warn(f"{where}: ignoring unknown field {key!r}", stacklevel=3)


def _matrix(value, rows, where):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: not a numeric matrix ({exc})") from None
    if arr.size == 0:
        arr = arr.reshape(rows, 0)
    if arr.ndim != 2:
        raise InstanceFormatError(f"{where}: expected a matrix (nested arrays), got ndim={arr.ndim}")
    return arr


def _vector(value, where):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: not a numeric vector ({exc})") from None
    if arr.ndim != 1:
        raise InstanceFormatError(f"{where}: expected a flat array, got ndim={arr.ndim}")
    return arr


def instance_from_dict(doc):
    _warn_unknown(doc, _TOP_KEYS, "instance")
    version = _require(doc, "version", "instance")
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(f"instance: schema version {version!r} not supported (expected {SCHEMA_VERSION})")
    dd = _require(doc, "dims", "instance")
    _warn_unknown(dd, _DIM_KEYS, "dims")
    try:
        dims = Dimensions(**{k: _require(dd, k, "dims") for k in _DIM_KEYS})
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"dims: {exc}") from None
    leaders = _require(doc, "leaders", "instance")
    followers = _require(doc, "followers", "instance")
    coupling = _require(doc, "coupling", "instance")
    if not isinstance(leaders, list) or not isinstance(followers, list) or not isinstance(coupling, list):
        raise InstanceFormatError("instance: 'leaders', 'followers' and 'coupling' must be arrays")

    fields = {k: [] for k in ("H", "G_cross", "D", "q", "A", "b", "M", "Q_cross", "c", "a")}
    for nu, ld in enumerate(leaders):
        where = f"leaders[{nu}]"
        for key in _LEADER_KEYS:
            _require(ld, key, where)
        _warn_unknown(ld, _LEADER_KEYS, where)
        nn = dims.n_nu[nu] if nu < dims.n_leaders else 0
        pp = dims.p_nu[nu] if nu < dims.n_leaders else 0
        fields["H"].append(_matrix(ld["H"], nn, f"{where}.H"))
        fields["G_cross"].append(_matrix(ld["G_cross"], nn, f"{where}.G_cross"))
        if not isinstance(ld["D"], list):
            raise InstanceFormatError(f"{where}.D: expected one matrix per follower")
        fields["D"].append([_matrix(blk, nn, f"{where}.D[{w}]") for w, blk in enumerate(ld["D"])])
        fields["q"].append(_vector(ld["q"], f"{where}.q"))
        fields["A"].append(_matrix(ld["A"], pp, f"{where}.A"))
        fields["b"].append(_vector(ld["b"], f"{where}.b"))
    for w, fd in enumerate(followers):
        where = f"followers[{w}]"
        for key in _FOLLOWER_KEYS:
            _require(fd, key, where)
        _warn_unknown(fd, _FOLLOWER_KEYS, where)
        mm = dims.m_omega[w] if w < dims.n_followers else 0
        fields["M"].append(_matrix(fd["M"], mm, f"{where}.M"))
        fields["Q_cross"].append(_matrix(fd["Q_cross"], mm, f"{where}.Q_cross"))
        fields["c"].append(_vector(fd["c"], f"{where}.c"))
        a = fd["a"]
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            raise InstanceFormatError(f"{where}.a: expected a number")
        fields["a"].append(float(a))
    d = [_vector(v, f"coupling[{nu}]") for nu, v in enumerate(coupling)]
    return ProblemInstance(dims=dims, d=d, **fields)


def load_instance(path):
    """Parse an instance file written by :func:`save_instance`.

    Unknown fields are ignored with a warning; missing fields, malformed
    numbers and unsupported schema versions raise InstanceFormatError.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"instance file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return instance_from_dict(doc)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None
