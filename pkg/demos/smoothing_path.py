"""
Following the smoothing path
============================

Solve the built-in two-leader two-follower game along the schedule
eps_k = 0.9^k, k = 0..74, from x0 = (3, 3, 3, 3) and from the origin, and
print the leaders' strategies every ten steps. Both runs settle on the
same point.
"""
import numpy as np

from mlmfg import Schedule, build_quadratic_model, hori_fukushima_ext, run_homotopy, stationarity_report

model = build_quadratic_model(hori_fukushima_ext())
schedule = Schedule(eps0=1.0, ratio=0.9, steps=75)

runs = {name: run_homotopy(model, schedule, x0) for name, x0 in
        [("x0 = 3", np.full(4, 3.0)), ("x0 = 0", np.zeros(4))]}

for name, traj in runs.items():
    print(f"\n{name}")
    print(f"{'k':>3s} {'eps':>10s}  " + "  ".join(f"x_{i + 1:d}".rjust(10) for i in range(4)))
    for rec in traj.records[::10] + traj.records[-1:]:
        print(f"{rec.k:3d} {rec.eps:10.3e}  " + "  ".join(f"{v:10.6f}" for v in rec.x))

a, b = (traj.records[-1].x for traj in runs.values())
print(f"\nfinal points differ by {np.max(np.abs(a - b)):.1e}")

# the tail of the path is flat
steps = runs["x0 = 3"].steps_inf()
print(f"largest of the last ten steps: {steps[-10:].max():.2e}")

report = stationarity_report(model, runs["x0 = 3"])
print(f"projection residual at eps = {report.eps_final:.2e}: {report.projection_residual:.2e}")
print(report.label)
