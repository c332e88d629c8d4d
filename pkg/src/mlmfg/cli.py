"""Command-line entry point ``mlmfg``.

Exit codes: 0 success, 2 usage, 3 validation failure, 4 solver failure,
5 check failure. ``MLMFG_LOG`` sets the logging level (e.g. ``INFO``).
"""
import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import checks
from .errors import InstanceFormatError, SolverError, SolverFailureAt
from .homotopy import HomotopyTrajectory, Schedule, run_homotopy, stationarity_report
from .model import BUILTINS, build_quadratic_model, builtin_instance, load_instance, validate_instance

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4, 5
DEFAULT_BUILTIN = "hori-fukushima-ext"
REPORT_TOL = 1e-12

log = logging.getLogger("mlmfg")


class UsageError(Exception):
    pass


def _parse_x0(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"--x0 expects comma-separated numbers, got {text!r}") from None


def _common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--instance", help="instance file, or builtin:NAME")
    src.add_argument("--builtin", choices=sorted(BUILTINS), help="built-in instance name")
    p.add_argument("--eps0", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--steps", type=int, default=75)
    p.add_argument("--x0", type=_parse_x0, default=None, help="initial leader point, e.g. 3,3,3,3")
    p.add_argument("--out", default="mlmfg-out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--retry-halve", action="store_true", help="retry a failed eps step once via an intermediate eps")


def build_parser():
    parser = argparse.ArgumentParser(prog="mlmfg", description="Smoothing method for multi-leader multi-follower games")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="run the eps homotopy and write trajectory.csv, report.json, summary.txt"))
    chk = sub.add_parser("check", help="run the oracle cross-validation suite")
    _common(chk)
    chk.add_argument("--from-report", metavar="DIR", help="re-check report.json in DIR against its trajectory.csv")
    tr = sub.add_parser("trace", help="print a per-eps CSV of x, y or residuals")
    tr.add_argument("quantity", choices=["x", "y", "residuals"])
    tr.add_argument("--trajectory", help="existing trajectory.csv (otherwise solved inline)")
    _common(tr)
    return parser


def _load(args):
    """Return ``(instance_label, model)``; raises UsageError / InstanceFormatError."""
    name = args.builtin
    if args.instance and args.instance.startswith("builtin:"):
        name = args.instance.split(":", 1)[1]
    if args.instance and name is None:
        path = Path(args.instance)
        if not path.is_file():
            raise UsageError(f"instance file not found: {path}")
        inst, label = load_instance(path), str(path)
    else:
        name = name or DEFAULT_BUILTIN
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin instance {name!r}; available: {sorted(BUILTINS)}")
        inst, label = builtin_instance(name), f"builtin:{name}"
    report = validate_instance(inst)
    if not report.ok:
        raise InstanceFormatError(f"{label}: {report}")
    return label, build_quadratic_model(inst)


def _config(args, model):
    try:
        schedule = Schedule(args.eps0, args.ratio, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    n = model.dims.n
    x0 = np.full(n, 3.0) if args.x0 is None else args.x0
    if x0.shape != (n,):
        raise UsageError(f"--x0 has {x0.size} entries, the instance has n = {n}")
    return schedule, x0


def _solve(args, label, model):
    schedule, x0 = _config(args, model)
    traj = run_homotopy(model, schedule, x0, retry_halve=args.retry_halve)
    return traj, schedule, x0


def _write_outputs(out, label, schedule, x0, traj, report):
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    doc = report.to_dict()
    doc["instance"] = label
    doc["schedule"] = {"eps0": schedule.eps0, "ratio": schedule.ratio, "steps": schedule.steps}
    doc["x0"] = [float(v) for v in x0]
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
    lines = [
        f"instance: {label}",
        f"schedule: eps_k = {schedule.eps0:g} * {schedule.ratio:g}^k, k = 0..{schedule.steps - 1}",
        f"x0: {', '.join(f'{v:g}' for v in x0)}",
        f"records: {len(traj)}",
        f"final eps: {report.eps_final:.6e}",
        f"final x: {', '.join(f'{v:.10f}' for v in report.x_final)}",
        f"final y: {', '.join(f'{v:.10f}' for v in traj.records[-1].y)}",
        f"projection residual: {report.projection_residual:.3e}",
        f"complementarity product error: {report.comp_product_error:.3e}",
        f"cauchy tail: {'n/a' if report.cauchy_tail is None else f'{report.cauchy_tail:.3e}'}",
        f"leader Newton iterations: {sum(r.newton_iters_leader for r in traj.records)}",
        f"wall time: {sum(r.wall_time for r in traj.records):.2f} s",
        report.label,
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def cmd_solve(args):
    label, model = _load(args)
    traj, schedule, x0 = _solve(args, label, model)
    report = stationarity_report(model, traj)
    out = Path(args.out)
    _write_outputs(out, label, schedule, x0, traj, report)
    print(f"{len(traj)} records written to {out / 'trajectory.csv'}")
    print(report.label)
    return EXIT_OK


def _recheck_report(args):
    out = Path(args.from_report)
    try:
        stored = json.loads((out / "report.json").read_text())
        traj = HomotopyTrajectory.from_csv(out / "trajectory.csv")
    except FileNotFoundError as exc:
        raise UsageError(f"missing file: {exc.filename}") from None
    args.instance, args.builtin = stored["instance"], None
    _, model = _load(args)
    fresh = stationarity_report(model, traj).to_dict()
    failures = []
    for key in ("eps_final", "projection_residual", "comp_product_error", "cauchy_tail"):
        a, b = stored[key], fresh[key]
        if (a is None) != (b is None) or (a is not None and abs(a - b) > REPORT_TOL):
            failures.append(f"{key}: stored {a!r}, recomputed {b!r}")
    if np.max(np.abs(np.subtract(stored["x_final"], fresh["x_final"]))) > REPORT_TOL:
        failures.append("x_final differs")
    for key in ("strict_complementarity", "label"):
        if stored[key] != fresh[key]:
            failures.append(f"{key}: stored {stored[key]!r}, recomputed {fresh[key]!r}")
    for msg in failures:
        print(f"FAIL  {msg}")
    if not failures:
        print(f"PASS  report.json in {out} matches recomputation within {REPORT_TOL:g}")
    return EXIT_CHECK if failures else EXIT_OK


def cmd_check(args):
    if args.from_report:
        return _recheck_report(args)
    label, model = _load(args)
    schedule, x0 = _config(args, model)
    print(f"checking {label} (seed {args.seed})")
    results = checks.run_all(model, schedule, x0, seed=args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_trace(args):
    if args.trajectory:
        path = Path(args.trajectory)
        if not path.is_file():
            raise UsageError(f"trajectory file not found: {path}")
        traj = HomotopyTrajectory.from_csv(path)
    else:
        label, model = _load(args)
        traj, _, _ = _solve(args, label, model)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    if args.quantity == "residuals":
        writer.writerow(["k", "eps", "ncp_residual", "vi_residual", "follower_comp_error"])
        for r in traj.records:
            writer.writerow([r.k, fmt(r.eps), fmt(r.ncp_residual), fmt(r.vi_residual), fmt(r.follower_comp_error)])
    else:
        width = len(getattr(traj.records[0], args.quantity))
        writer.writerow(["k", "eps"] + [f"{args.quantity}_{i + 1}" for i in range(width)])
        for r in traj.records:
            writer.writerow([r.k, fmt(r.eps)] + [fmt(v) for v in getattr(r, args.quantity)])
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "trace": cmd_trace}


def main(argv=None):
    level = getattr(logging, os.environ.get("MLMFG_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mlmfg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceFormatError as exc:
        print(f"mlmfg: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverFailureAt as exc:
        print(f"mlmfg: {exc} ({len(exc.trajectory)} records completed)", file=sys.stderr)
        return EXIT_SOLVER
    except SolverError as exc:
        print(f"mlmfg: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
