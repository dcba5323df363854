"""Command-line interface: solve, oracle, compare.

Exit codes are the pass/fail channel: 0 success (solve converged / oracle
converged / comparison within tolerance), 1 invalid input (missing or
malformed config, bad grid, mismatched CSVs), 2 a run that started but did
not meet its target (solver non-convergence or Newton failure, shooting
failure, comparison exceeding --tol).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .config import load_config, resolve_config
from .csvio import read_trajectory, write_trajectory
from .errors import GmlBvpError, InputError, SolverError
from .shooting import ShootingConfig, solve_shooting
from .solver import initial_guess, outer_iterate

__all__ = ["main"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAILED = 2


def _write_json(path, payload) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_payload(report) -> dict:
    payload = dataclasses.asdict(report)
    payload["final_update_norm"] = (report.residual_history[-1]
                                    if report.residual_history else None)
    payload["final_endpoint_discrepancy"] = (
        report.endpoint_discrepancy_history[-1]
        if report.endpoint_discrepancy_history else None)
    payload["max_telescoping_violation"] = (
        max(report.telescoping_history) if report.telescoping_history else None)
    return payload


def _cmd_solve(args) -> int:
    run = resolve_config(load_config(args.config))
    out_path = args.out or run.out_path or "solution.csv"
    report_path = args.report or run.report_path or "report.json"
    guess = initial_guess(run.problem, run.free_start_defaults)
    try:
        trajectory, report = outer_iterate(
            run.problem, run.params, guess,
            endpoint_correction=run.endpoint_correction,
            engine=run.engine, collect_diagnostics=args.diagnostics)
    except SolverError as exc:
        report = getattr(exc, "report", None)
        if report is not None:
            _write_json(report_path, _report_payload(report))
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    write_trajectory(out_path, trajectory, run.labels)
    _write_json(report_path, _report_payload(report))
    print(f"wrote {out_path} and {report_path} "
          f"(converged={report.converged}, iterations={report.outer_iterations}, "
          f"engine={report.engine})")
    if not report.converged:
        print(f"solve did not converge: {report.termination}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _cmd_oracle(args) -> int:
    run = resolve_config(load_config(args.config))
    out_path = args.out or run.out_path or "oracle.csv"
    report_path = args.report or run.report_path or "oracle_report.json"
    oracle = run.oracle
    if args.integrator is not None:
        oracle = ShootingConfig(integrator=args.integrator,
                                root_tol=oracle.root_tol,
                                max_root_iter=oracle.max_root_iter,
                                bracket=oracle.bracket, guess=oracle.guess)
    try:
        trajectory, report = solve_shooting(run.problem, oracle, engine=run.engine)
    except SolverError as exc:
        print(f"oracle failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    write_trajectory(out_path, trajectory, run.labels)
    payload = dataclasses.asdict(report)
    payload["free_start_values"] = [float(v) for v in report.free_start_values]
    _write_json(report_path, payload)
    print(f"wrote {out_path} and {report_path} "
          f"(mismatch={report.final_mismatch_norm:.3e}, method={report.method}, "
          f"iterations={report.iterations})")
    return EXIT_OK


def _cmd_compare(args) -> int:
    t_a, val_a, lab_a = read_trajectory(args.a)
    t_b, val_b, lab_b = read_trajectory(args.b)
    if lab_a != lab_b:
        raise InputError(f"column mismatch: {lab_a} vs {lab_b}")
    if t_a.shape != t_b.shape or not np.array_equal(t_a, t_b):
        raise InputError("grid mismatch between the two files")
    columns = {}
    worst_rel = 0.0
    for c, label in enumerate(lab_a):
        diff = float(np.max(np.abs(val_a[:, c] - val_b[:, c])))
        scale = max(float(np.max(np.abs(val_a[:, c]))),
                    float(np.max(np.abs(val_b[:, c]))))
        rel = 0.0 if diff == 0.0 else diff / max(scale, np.finfo(float).tiny)
        worst_rel = max(worst_rel, rel)
        columns[label] = {"max_abs_diff": diff, "max_rel_diff": rel}
    payload = {"columns": columns, "tol": args.tol, "within_tol": worst_rel <= args.tol}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.report:
        with open(args.report, "w", newline="\n") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if worst_rel <= args.tol else EXIT_FAILED


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmlbvp",
        description="Relaxation BVP solver, shooting oracle and trajectory tools")
    parser.add_argument("--version", action="version", version=f"gmlbvp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the relaxation solver on a config")
    p_solve.add_argument("config")
    p_solve.add_argument("--out", help="trajectory CSV path (default solution.csv)")
    p_solve.add_argument("--report", help="report JSON path (default report.json)")
    p_solve.add_argument("--diagnostics", action="store_true",
                         help="record the telescoping identity check per iteration")
    p_solve.set_defaults(fn=_cmd_solve)

    p_oracle = sub.add_parser("oracle", help="run the shooting oracle on a config")
    p_oracle.add_argument("config")
    p_oracle.add_argument("--integrator", choices=["euler", "rk4"],
                          help="override the config's integrator")
    p_oracle.add_argument("--out", help="trajectory CSV path (default oracle.csv)")
    p_oracle.add_argument("--report", help="report JSON path (default oracle_report.json)")
    p_oracle.set_defaults(fn=_cmd_oracle)

    p_cmp = sub.add_parser("compare", help="compare two trajectory CSVs")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--tol", type=float, default=1e-6,
                       help="max allowed per-column relative difference (default 1e-6)")
    p_cmp.add_argument("--report", help="also write the difference report to this path")
    p_cmp.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except GmlBvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
