"""Smoothing method for stationary Nash equilibria of multi-leader
multi-follower games."""
from .errors import (CyclingDetected, DimensionError, DivergenceDetected, InstanceFormatError,
                     LinearSolveFailure, LineSearchFailure, MaxIterations, NoConvergence, SolverError,
                     SolverFailureAt)
from .follower import (DegeneracyReport, FollowerState, KktJacobianBlocks, assemble_H, assemble_jacobians,
                       classify_degeneracy, response_jacobian, solve_followers)
from .homotopy import HomotopyTrajectory, Schedule, StationarityReport, run_homotopy, stationarity_report
from .leader import LeaderState, leader_field, ncp_jacobian, ncp_residual, solve_leader_ncp, vi_residual
from .model import (Dimensions, GameModel, ProblemInstance, QuadraticGameModel, ValidationReport,
                    build_quadratic_model, builtin_instance, hori_fukushima_ext, load_instance, save_instance,
                    validate_instance)
from .oracle import OracleConfig, best_response_fixed_point, finite_diff_jacobian, leader_oracle_equilibrium
from .smoothing import fb, fb_gradient, fb_smoothed, natural_residual

__version__ = "0.1.0"
