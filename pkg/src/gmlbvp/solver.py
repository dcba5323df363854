"""Relaxed-equation BVP solver: endpoint system, backward sweep, outer iteration.

The discrete scheme treats the relaxed system
    K u' - (K-1) u~' = f(u)
on a uniform grid.  Each outer iteration (a) solves the telescoped endpoint
system for the components free at t=0 together with the unknown terminal
components, (b) recovers the interior nodes by an implicit backward sweep and
(c) replaces the previous iterate u~ by the new trajectory.  At a fixed point
the per-step equations collapse to the explicit-Euler recursion
u_k - u_{k-1} = f(u_{k-1}) d, so a converged run solves the same discrete
system as explicit-Euler shooting with the same boundary conditions.

The telescoped endpoint equation is exact only when the accumulated error
term E_N is retained.  `outer_iterate` estimates that term on the previous
iterate by default (endpoint_correction=True), which makes the fixed point
exactly the Euler-shooting solution; endpoint_correction=False drops it,
biasing the fixed point by O(K * E_N).  `endpoint_residual` itself takes the
correction as an explicit argument (None = dropped).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import _pykernels as pk
from . import engine as engine_mod
from .errors import (DivergenceError, EndpointSolveError, RhsEvaluationError,
                     SweepError, TrajectoryError)
from .newton import NewtonOptions, NewtonResult, newton_solve
from .problem import (BvpProblem, Grid, RelaxationParams, SolveReport, Trajectory)

__all__ = [
    "EndpointUnknowns",
    "initial_guess",
    "endpoint_residual",
    "endpoint_error_correction",
    "solve_endpoint",
    "backward_step_residual",
    "backward_sweep",
    "outer_iterate",
    "error_term",
    "telescoping_identity_check",
    "euler_residual_norm",
]


@dataclass(frozen=True)
class EndpointUnknowns:
    """Unknowns of the endpoint system, each in ascending component order:
    values of the components free at t=0, then the terminal components not
    fixed at t=t_final."""

    free_start_values: np.ndarray
    unknown_end_values: np.ndarray


def _bc_index_arrays(problem: BvpProblem):
    """0-based index arrays: (free-at-start, fixed-at-start idx/val,
    unknown-at-end, fixed-at-end idx/val)."""
    bc = problem.bc
    free0 = np.array([j - 1 for j in bc.free_at_start], dtype=np.intp)
    unkN = np.array([j - 1 for j in bc.unknown_at_end], dtype=np.intp)
    f0i, f0v = problem.start_values_array()
    fNi, fNv = problem.end_values_array()
    return free0, f0i, f0v, unkN, fNi, fNv


def _assemble_states(problem: BvpProblem, x: EndpointUnknowns):
    """Full u_0 and u_N vectors from boundary values plus the unknowns."""
    n = problem.dimension
    free0, f0i, f0v, unkN, fNi, fNv = _bc_index_arrays(problem)
    fs = np.asarray(x.free_start_values, dtype=float)
    ue = np.asarray(x.unknown_end_values, dtype=float)
    if fs.shape != (len(free0),) or ue.shape != (len(unkN),):
        raise ValueError(
            f"EndpointUnknowns lengths {fs.shape[0]}/{ue.shape[0]} do not match "
            f"the boundary structure ({len(free0)} free at start, "
            f"{len(unkN)} unknown at end)")
    u0 = np.empty(n)
    uN = np.empty(n)
    u0[f0i] = f0v
    u0[free0] = fs
    uN[fNi] = fNv
    uN[unkN] = ue
    return u0, uN


def initial_guess(problem: BvpProblem,
                  free_start_defaults: Optional[Mapping[int, float]] = None) -> Trajectory:
    """Starting trajectory u~ for the outer iteration.

    Components fixed at both ends interpolate linearly between their values;
    components fixed at one end only stay constant at that value; components
    free at the start stay constant at the caller's default (key: 1-based
    component index) or 0.
    """
    defaults = dict(free_start_defaults or {})
    n = problem.dimension
    n_nodes = problem.grid.n_nodes
    bc = problem.bc
    values = np.empty((n_nodes + 1, n))
    ramp = np.linspace(0.0, 1.0, n_nodes + 1)
    for j in range(1, n + 1):
        at_start = bc.fixed_at_start.get(j)
        at_end = bc.fixed_at_end.get(j)
        if at_start is not None and at_end is not None:
            values[:, j - 1] = at_start + (at_end - at_start) * ramp
        elif at_start is not None:
            values[:, j - 1] = at_start
        elif at_end is not None:
            values[:, j - 1] = at_end
        else:
            values[:, j - 1] = float(defaults.get(j, 0.0))
    return Trajectory(grid=problem.grid, values=values)


def endpoint_error_correction(tilde: Trajectory, problem: BvpProblem,
                              params: RelaxationParams) -> np.ndarray:
    """Accumulated error term at the last node, estimated on a trajectory:
    component j is error_term(tilde, j, N), i.e.
    sum_{m=1..N} m (f_j(tilde_{m-1}) - f_j(tilde_m)) d / K."""
    return pk.endpoint_correction(problem.system.rhs, tilde.values,
                                  problem.grid.step, params.relax_k)


def endpoint_residual(x: EndpointUnknowns, problem: BvpProblem, tilde: Trajectory,
                      params: RelaxationParams,
                      error_correction: Optional[np.ndarray] = None) -> np.ndarray:
    """Residual of the telescoped endpoint system at the given unknowns.

    Component j:  (u_j)_N - (u_j)_0 - f_j(u_N) N d / K
                  - (K-1)/K ((u~_j)_N - (u~_j)_0) - E_j,
    with E = error_correction (dropped when None, as in the plain telescoped
    approximation; pass endpoint_error_correction(tilde, ...) to retain it).
    """
    _check_same_grid(tilde.grid, problem.grid)
    n = problem.dimension
    u0, uN = _assemble_states(problem, x)
    grid = problem.grid
    fN = _rhs_checked(problem, uN, grid.t_final, grid.n_nodes)
    E = np.zeros(n) if error_correction is None else np.asarray(error_correction, dtype=float)
    out = np.empty(n)
    tf_over_k = (grid.n_nodes * grid.step) / params.relax_k
    pk.endpoint_residual_kernel(u0, uN, tilde.values, tf_over_k, params.relax_k,
                                fN, E, out)
    return out


def _rhs_checked(problem: BvpProblem, u: np.ndarray, t: float, node: int) -> np.ndarray:
    return pk._rhs_at(problem.system.rhs, u, t, node)


def solve_endpoint(problem: BvpProblem, tilde: Trajectory, params: RelaxationParams,
                   guess: Optional[EndpointUnknowns] = None,
                   error_correction: Optional[np.ndarray] = None
                   ) -> tuple[np.ndarray, np.ndarray, NewtonResult]:
    """Newton solve of endpoint_residual = 0 over the endpoint unknowns.

    The warm start defaults to the previous iterate's endpoint values.
    Returns the assembled full endpoint states (u_0, u_N) and the Newton
    result; non-convergence raises EndpointSolveError carrying the unknown
    vector at failure (a singular Jacobian surfaces as SingularMatrixError).
    """
    _check_same_grid(tilde.grid, problem.grid)
    free0, f0i, f0v, unkN, fNi, fNv = _bc_index_arrays(problem)
    n_nodes = problem.grid.n_nodes
    if guess is None:
        guess = EndpointUnknowns(
            free_start_values=tilde.values[0, free0].copy(),
            unknown_end_values=tilde.values[n_nodes, unkN].copy())
    z0 = np.concatenate([np.asarray(guess.free_start_values, dtype=float),
                         np.asarray(guess.unknown_end_values, dtype=float)])
    nf = len(free0)

    def split(z):
        return EndpointUnknowns(free_start_values=z[:nf],
                                unknown_end_values=z[nf:])

    def residual(z):
        return endpoint_residual(split(z), problem, tilde, params,
                                 error_correction=error_correction)

    jac = None
    if problem.system.jacobian is not None:
        tf_over_k = (n_nodes * problem.grid.step) / params.relax_k

        def jac(z):
            _, uN = _assemble_states(problem, split(z))
            Jf = np.asarray(problem.system.jacobian(uN), dtype=float)
            n = problem.dimension
            Jz = np.zeros((n, len(z)))
            for i, comp in enumerate(free0):
                Jz[comp, i] = -1.0
            for i, comp in enumerate(unkN):
                Jz[:, nf + i] = -Jf[:, comp] * tf_over_k
                Jz[comp, nf + i] += 1.0
            return Jz

    opts = NewtonOptions(tol=params.newton_tol, max_iter=params.newton_max_iter)
    result = newton_solve(residual, z0, opts, jac=jac)
    if not result.converged:
        raise EndpointSolveError(
            f"endpoint Newton stalled at residual {result.final_residual_norm:.3e} "
            f"after {result.iterations} iterations",
            unknowns=result.solution.copy(),
            residual_norm=result.final_residual_norm)
    u0, uN = _assemble_states(problem, split(result.solution))
    return u0, uN, result


def backward_step_residual(u_prev: np.ndarray, u_next: np.ndarray,
                           tilde_prev: np.ndarray, tilde_next: np.ndarray,
                           params: RelaxationParams, grid: Grid,
                           problem: BvpProblem, node_time: float = 0.0) -> np.ndarray:
    """Residual of one implicit backward step, per component j:
    (u_j)_next - (u_j)_prev - f_j(u_prev) d/K - (K-1)/K ((u~_j)_next - (u~_j)_prev).

    f is evaluated at the earlier (unknown) node, which is what makes each
    sweep step a small Newton solve.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    f_prev = _rhs_checked(problem, u_prev, node_time, node=None)
    out = np.empty(problem.dimension)
    pk.step_residual(u_prev, np.asarray(u_next, dtype=float),
                     np.asarray(tilde_prev, dtype=float),
                     np.asarray(tilde_next, dtype=float), f_prev,
                     grid.step / params.relax_k, params.relax_k, out)
    return out


def backward_sweep(uN: np.ndarray, tilde: Trajectory, problem: BvpProblem,
                   params: RelaxationParams, engine: Optional[str] = None,
                   keep_raw_start: bool = False) -> Trajectory:
    """Node-by-node backward recovery of the trajectory from u_N.

    For k = N..1 the step equation is solved for u_{k-1} by Newton, warm
    started at u_k.  Node 0 of the returned trajectory is then overwritten on
    its fixed-at-start components with the prescribed boundary values
    (keep_raw_start=True skips the overwrite, leaving the recursion-consistent
    swept state, which is what telescoping_identity_check expects).
    Per-node Newton failure raises SweepError with the node index.
    """
    _check_same_grid(tilde.grid, problem.grid)
    lane = engine_mod.resolve(problem.system, engine)
    values = lane.sweep(np.asarray(uN, dtype=float), tilde.values,
                        problem.grid.step, params.relax_k, params.newton_tol,
                        params.newton_max_iter,
                        NewtonOptions().max_damping_halvings)
    if not keep_raw_start:
        f0i, f0v = problem.start_values_array()
        values[0, f0i] = f0v
    return Trajectory(grid=problem.grid, values=values)


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a.n_nodes != b.n_nodes or a.t_final != b.t_final:
        raise TrajectoryError(
            f"grid mismatch: ({a.n_nodes}, {a.t_final}) vs ({b.n_nodes}, {b.t_final})")


def outer_iterate(problem: BvpProblem, params: RelaxationParams,
                  guess: Optional[Trajectory] = None,
                  free_start_defaults: Optional[Mapping[int, float]] = None,
                  endpoint_correction: bool = True,
                  engine: Optional[str] = None,
                  collect_diagnostics: bool = False
                  ) -> tuple[Trajectory, SolveReport]:
    """Outer proximal iteration: repeat {solve_endpoint; backward_sweep;
    measure update norm; u~ <- u} until the relative update sup-norm
    max |u - u~| / (1 + |u|) drops to params.outer_tol or max_outer_iter.

    Plain non-convergence returns the best iterate with converged=False;
    endpoint/sweep Newton failures and the divergence guard (update norm
    > 1e6) raise, with the partial SolveReport attached to the exception as
    `.report`.  collect_diagnostics additionally records the telescoping
    identity violation of each raw sweep (pre-overwrite) against its u~.
    """
    if guess is None:
        guess = initial_guess(problem, free_start_defaults)
    _check_same_grid(guess.grid, problem.grid)
    free0, f0i, f0v, unkN, fNi, fNv = _bc_index_arrays(problem)
    lane = engine_mod.resolve(problem.system, engine)
    halvings = NewtonOptions().max_damping_halvings
    start = time.perf_counter()
    values, status, upd_hist, disc_hist, tele_hist, context = lane.outer_run(
        guess.values, problem.grid.step, params.relax_k, free0, f0i, f0v,
        unkN, fNi, fNv, params.outer_tol, params.max_outer_iter,
        params.newton_tol, params.newton_max_iter, halvings,
        endpoint_correction, collect_diagnostics)
    wall = time.perf_counter() - start

    report = SolveReport(
        converged=(status == pk.STATUS_CONVERGED),
        outer_iterations=len(upd_hist),
        residual_history=list(upd_hist),
        newton_failures=1 if status in (pk.STATUS_ENDPOINT_FAIL,
                                        pk.STATUS_SWEEP_FAIL) else 0,
        endpoint_discrepancy_history=list(disc_hist),
        telescoping_history=list(tele_hist),
        engine=lane.name,
        wall_time=wall,
    )
    try:
        report.final_euler_residual = lane.euler_defect(values, problem.grid.step)
    except RhsEvaluationError:
        report.final_euler_residual = float("nan")

    if status == pk.STATUS_CONVERGED:
        report.termination = "converged"
    elif status == pk.STATUS_MAX_OUTER:
        report.termination = "max_outer_iterations"
    elif status == pk.STATUS_ENDPOINT_FAIL:
        report.termination = "endpoint_newton_failure"
        exc = EndpointSolveError(
            f"endpoint Newton failed at outer iteration {len(upd_hist) + 1} "
            f"(residual {context.get('endpoint_residual', float('nan')):.3e})",
            unknowns=context.get("endpoint_unknowns"),
            residual_norm=context.get("endpoint_residual"))
        exc.report = report
        raise exc
    elif status == pk.STATUS_SWEEP_FAIL:
        report.termination = "sweep_newton_failure"
        exc = SweepError(context.get("sweep_error", "sweep Newton failure"),
                         node=context.get("sweep_node", -1))
        exc.report = report
        raise exc
    elif status == pk.STATUS_DIVERGED:
        report.termination = "diverged"
        exc = DivergenceError(
            f"outer update norm {upd_hist[-1]:.3e} exceeded the divergence "
            f"guard {pk.DIVERGENCE_GUARD:g} at iteration {len(upd_hist)}")
        exc.report = report
        raise exc
    elif status == pk.STATUS_RHS_FAIL:
        report.termination = "rhs_failure"
        exc = RhsEvaluationError(
            context.get("rhs_error", "rhs evaluation failed"),
            node=context.get("rhs_node"))
        exc.report = report
        raise exc

    return Trajectory(grid=problem.grid, values=values), report


def error_term(u: Trajectory, j: int, k: int, problem: BvpProblem,
               params: RelaxationParams) -> float:
    """Accumulated error term (E_j)_k of the telescoped identity:
    sum_{m=1..k} m [f_j(u_{m-1}) - f_j(u_m)] d / K.

    j is a 1-based component index; 1 <= k <= N.  The weights grow with m,
    matching the recursion (E_j)_k = (E_j)_{k-1} + k (f_j(u_{k-1}) -
    f_j(u_k)) d/K, which is what makes the identity exact.
    """
    n = problem.dimension
    if not 1 <= j <= n:
        raise ValueError(f"component index {j} out of range 1..{n}")
    n_nodes = u.grid.n_nodes
    if not 1 <= k <= n_nodes:
        raise ValueError(f"node index {k} out of range 1..{n_nodes}")
    d = u.grid.step
    d_over_k = d / params.relax_k
    col = j - 1
    total = 0.0
    f_prev = _rhs_checked(problem, u.values[0], 0.0, 0)[col]
    for m in range(1, k + 1):
        f_cur = _rhs_checked(problem, u.values[m], m * d, m)[col]
        total += m * (f_prev - f_cur) * d_over_k
        f_prev = f_cur
    return total


def telescoping_identity_check(u: Trajectory, tilde: Trajectory,
                               problem: BvpProblem,
                               params: RelaxationParams) -> float:
    """Max over nodes/components of the telescoped-identity violation
    |(u_j)_k - (u_j)_0 - f_j(u_k) k d/K - (K-1)/K ((u~_j)_k - (u~_j)_0) - (E_j)_k|.

    For a pair where u satisfies the per-step recursion against u~ for steps
    1..N (e.g. a raw backward sweep), this is an algebraic identity and the
    result is at round-off / step-tolerance level.
    """
    _check_same_grid(u.grid, tilde.grid)
    return pk.telescoping_max(problem.system.rhs, u.values, tilde.values,
                              u.grid.step, params.relax_k)


def euler_residual_norm(u: Trajectory, problem: BvpProblem) -> float:
    """max_{k,j} |(u_j)_k - (u_j)_{k-1} - f_j(u_{k-1}) d|: how far the
    trajectory is from an explicit-Euler orbit of the original system."""
    _check_same_grid(u.grid, problem.grid)
    return pk.euler_defect(problem.system.rhs, u.values, u.grid.step)
