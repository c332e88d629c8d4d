"""
Cross-checking against slow reference solvers
=============================================

The Newton-based path solver is compared with two independent methods:
Gauss-Seidel best-response sweeps for the followers' game at eps = 0, and
alternating projected-gradient descent on each leader's reduced objective
at the final smoothing level.
"""
import time

import numpy as np

from mlmfg import (Schedule, best_response_fixed_point, build_quadratic_model, hori_fukushima_ext,
                   leader_oracle_equilibrium, run_homotopy, solve_followers)

model = build_quadratic_model(hori_fukushima_ext())
traj = run_homotopy(model, Schedule(), np.full(4, 3.0))
last = traj.records[-1]

y_newton = solve_followers(model, last.x, 1e-5).y
y_sweeps = best_response_fixed_point(model, last.x, 0.0)
print("followers at the final x")
print("  Newton, eps = 1e-5 :", np.array2string(y_newton, precision=8))
print("  best response      :", np.array2string(y_sweeps, precision=8))

t0 = time.perf_counter()
x_oracle, info = leader_oracle_equilibrium(model, last.eps, np.full(4, 3.0), return_info=True)
print(f"\nleaders at eps = {last.eps:.3e}")
print("  homotopy           :", np.array2string(last.x, precision=8))
print(f"  projected gradient : {np.array2string(x_oracle, precision=8)}"
      f"  ({info['iterations']} cycles, {time.perf_counter() - t0:.1f} s)")
print(f"  difference         : {np.max(np.abs(x_oracle - last.x)):.1e}")
