"""Outer continuation in the smoothing parameter and final-point diagnostics."""
import csv
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SolverError, SolverFailureAt
from .follower import classify_degeneracy, comp_product_error
from .leader import leader_field, solve_leader_ncp, vi_residual
from .smoothing import natural_residual

log = logging.getLogger(__name__)

TAIL = 10


@dataclass(frozen=True)
class Schedule:
    """Geometric schedule ``eps_k = eps0 * ratio**k``, ``k = 0..steps-1``."""

    eps0: float = 1.0
    ratio: float = 0.9
    steps: int = 75

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")

    def eps(self, k):
        return self.eps0 * self.ratio ** k

    def values(self):
        return [self.eps(k) for k in range(self.steps)]


@dataclass
class HomotopyRecord:
    k: int
    eps: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    ncp_residual: float
    vi_residual: float
    follower_comp_error: float
    newton_iters_leader: int
    newton_iters_follower: int
    singular_solves: int
    wall_time: float = field(default=0.0, compare=False)


# wall_time is left out of the CSV so that reruns are byte-identical
_SCALARS = ("ncp_residual", "vi_residual", "follower_comp_error",
            "newton_iters_leader", "newton_iters_follower", "singular_solves")
_VECTORS = (("x", "x"), ("y", "y"), ("z", "z"), ("lam", "lambda"), ("mu", "mu"))


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass
class HomotopyTrajectory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def eps(self):
        return np.array([r.eps for r in self.records])

    @property
    def xs(self):
        return np.array([r.x for r in self.records])

    @property
    def ys(self):
        return np.array([r.y for r in self.records])

    def steps_inf(self):
        """``||x_k - x_{k-1}||_inf`` for k = 1..K-1."""
        xs = self.xs
        return np.max(np.abs(np.diff(xs, axis=0)), axis=1) if len(xs) > 1 else np.zeros(0)

    def header(self):
        r = self.records[0]
        cols = ["k", "eps"]
        for attr, label in _VECTORS:
            cols += [f"{label}_{i + 1}" for i in range(len(getattr(r, attr)))]
        return cols + list(_SCALARS)

    def rows(self):
        for r in self.records:
            row = [_fmt(r.k), _fmt(r.eps)]
            for attr, _ in _VECTORS:
                row += [_fmt(v) for v in getattr(r, attr)]
            row += [_fmt(getattr(r, s)) for s in _SCALARS]
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            writer.writerows(self.rows())

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        idx = {name: i for i, name in enumerate(header)}
        records = []
        for row in rows:
            vecs = {}
            for attr, label in _VECTORS:
                cols = [i for name, i in idx.items() if name.startswith(label + "_")]
                cols.sort(key=lambda i: int(header[i].rsplit("_", 1)[1]))
                vecs[attr] = np.array([float(row[i]) for i in cols])
            scalars = {}
            for s in _SCALARS:
                val = row[idx[s]]
                scalars[s] = int(val) if s in ("newton_iters_leader", "newton_iters_follower", "singular_solves") else float(val)
            records.append(HomotopyRecord(k=int(row[idx["k"]]), eps=float(row[idx["eps"]]), **vecs, **scalars))
        return cls(records)


def _solve_step(model, eps, v, w):
    return solve_leader_ncp(model, eps, v, warm=w)


def run_homotopy(model, schedule=None, x0=None, mu0=None, retry_halve=False):
    """Solve the smoothed leader NCP along a decreasing eps schedule.

    Each step is warm-started from the previous leader point ``(x, mu)`` and
    follower state. With ``retry_halve`` a failing step is retried once after
    inserting an intermediate eps halfway (geometrically) to the previous one.

    Raises
    ------
    SolverFailureAt
        Carries the partial trajectory computed before the failure.
    """
    schedule = schedule or Schedule()
    dims = model.dims
    x = np.zeros(dims.n) if x0 is None else np.asarray(x0, dtype=float)
    if x.shape != (dims.n,) or not np.all(np.isfinite(x)):
        raise ValueError(f"x0 must be a finite vector of length {dims.n}")
    mu = np.zeros(dims.p) if mu0 is None else np.asarray(mu0, dtype=float)
    v = np.concatenate([x, mu])
    w = None
    traj = HomotopyTrajectory()
    retried = False

    for k, eps in enumerate(schedule.values()):
        t0 = time.perf_counter()
        try:
            sol = _solve_step(model, eps, v, w)
        except SolverError as exc:
            if not (retry_halve and not retried and k > 0):
                raise SolverFailureAt(k, eps, traj, exc) from exc
            retried = True
            mid = np.sqrt(traj.records[-1].eps * eps)
            log.warning("step k=%d failed (%s); retrying through eps=%.6g", k, exc, mid)
            try:
                inter = _solve_step(model, mid, v, w)
                sol = _solve_step(model, eps, inter.v, inter.follower)
            except SolverError as exc2:
                raise SolverFailureAt(k, eps, traj, exc2) from exc2
        v, w = sol.v, sol.follower
        F = leader_field(model, sol.x, eps, warm=w)
        A, b = model.leader_constraints()
        fhat = np.concatenate([F + A.T @ sol.mu, b - A @ sol.x])
        rec = HomotopyRecord(
            k=k, eps=eps, x=sol.x.copy(), y=w.y.copy(), z=w.z.copy(), lam=w.lam.copy(), mu=sol.mu.copy(),
            ncp_residual=natural_residual(sol.v, fhat),
            vi_residual=vi_residual(model, sol.x, F),
            follower_comp_error=comp_product_error(w, eps),
            newton_iters_leader=sol.iterations,
            newton_iters_follower=w.iterations,
            singular_solves=sol.singular_solves,
            wall_time=time.perf_counter() - t0,
        )
        traj.records.append(rec)
        log.info("k=%d eps=%.6g leader iters=%d ncp=%.3e", k, eps, sol.iterations, rec.ncp_residual)
    return traj


@dataclass
class StationarityReport:
    """Diagnostics at the last point of a trajectory.

    ``projection_residual`` is ``||x - P_X(x - F_eps(x))||_inf`` at the final
    eps: a finite-eps surrogate for B-stationarity of the unsmoothed game,
    which is only attained in the limit eps -> 0.
    """

    eps_final: float
    x_final: np.ndarray
    projection_residual: float
    comp_product_error: float
    degeneracy: object
    strict_complementarity: bool
    cauchy_tail: object
    label: str

    def to_dict(self):
        deg = asdict(self.degeneracy)
        deg = {k: (list(v) if isinstance(v, tuple) else v) for k, v in deg.items()}
        return {
            "eps_final": self.eps_final,
            "x_final": [float(v) for v in self.x_final],
            "projection_residual": self.projection_residual,
            "comp_product_error": self.comp_product_error,
            "degeneracy": deg,
            "strict_complementarity": self.strict_complementarity,
            "cauchy_tail": self.cauchy_tail,
            "label": self.label,
        }


def stationarity_report(model, trajectory):
    """Recompute residuals at the final record from a cold follower solve."""
    if not trajectory.records:
        raise ValueError("empty trajectory")
    last = trajectory.records[-1]
    eps, x = float(last.eps), np.asarray(last.x, dtype=float)
    # warm=None: cold follower solve, so the result depends on x and eps only
    F, w = leader_field(model, x, eps, return_state=True)
    deg = classify_degeneracy(w)
    scale = max(1.0, float(np.max(np.abs(np.concatenate([w.z, w.lam])))))
    relaxed = classify_degeneracy(w, tol=10.0 * eps * scale)
    strict = relaxed.strictly_complementary and not relaxed.ambiguous
    steps = trajectory.steps_inf()
    tail = float(np.max(steps[-TAIL:])) if steps.size else None
    if strict:
        label = "approximate B-stationary Nash equilibrium (strict complementarity at final eps)"
    else:
        label = "approximate C-stationary Nash equilibrium (degenerate follower constraints at final eps)"
    return StationarityReport(
        eps_final=eps,
        x_final=x.copy(),
        projection_residual=vi_residual(model, x, F),
        comp_product_error=comp_product_error(w, eps),
        degeneracy=deg,
        strict_complementarity=bool(strict),
        cauchy_tail=tail,
        label=label,
    )
