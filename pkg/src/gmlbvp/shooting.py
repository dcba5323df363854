"""Independent verification path: forward integration plus root-finding.

Solves the same boundary-value problems as the relaxation solver by guessing
the free initial components, integrating forward (explicit Euler on the
solver's grid, or classical RK4 as a higher-accuracy reference) and driving
the terminal boundary mismatch to zero.  The Euler variant deliberately
shares the solver's grid: a converged relaxation run and the Euler shooting
solution characterize the same discrete system, so they can be compared at
near-roundoff tolerances rather than up-to-discretization ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import engine as engine_mod
from .errors import BracketError, ConfigError, SolverError
from .newton import NewtonOptions, newton_solve
from .problem import BvpProblem, Grid, OdeSystem, Trajectory

__all__ = [
    "ShootingConfig",
    "ShootingReport",
    "euler_integrate",
    "rk4_integrate",
    "terminal_mismatch",
    "solve_shooting",
]

INTEGRATORS = ("euler", "rk4")


@dataclass(frozen=True)
class ShootingConfig:
    """Oracle settings.

    bracket: two vectors over the free-at-start components (scalars are fine
    for one free component) enclosing a sign change -- enables bisection in
    the one-dimensional case.  guess: a single starting vector for the damped
    Newton fallback.  root_tol bounds |terminal_mismatch|_inf at the solution.
    """

    integrator: str = "euler"
    root_tol: float = 1e-8
    max_root_iter: int = 100
    bracket: Optional[tuple[Sequence[float], Sequence[float]]] = None
    guess: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ConfigError(
                f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if not self.root_tol > 0.0:
            raise ConfigError("root_tol must be > 0")
        if self.max_root_iter < 1:
            raise ConfigError("max_root_iter must be a positive integer")


@dataclass
class ShootingReport:
    converged: bool
    iterations: int
    final_mismatch_norm: float
    free_start_values: np.ndarray
    method: str
    integrator: str
    engine: str = ""


def euler_integrate(system: OdeSystem, u0, grid: Grid,
                    engine: Optional[str] = None) -> Trajectory:
    """Explicit Euler on the grid: u_k = u_{k-1} + f(u_{k-1}) * step."""
    lane = engine_mod.resolve(system, engine)
    values = lane.euler_path(np.asarray(u0, dtype=float), grid.step, grid.n_nodes)
    return Trajectory(grid=grid, values=values)


def rk4_integrate(system: OdeSystem, u0, grid: Grid,
                  engine: Optional[str] = None) -> Trajectory:
    """Classical 4-stage Runge-Kutta on the grid."""
    lane = engine_mod.resolve(system, engine)
    values = lane.rk4_path(np.asarray(u0, dtype=float), grid.step, grid.n_nodes)
    return Trajectory(grid=grid, values=values)


def _integrator_fn(config: ShootingConfig):
    return euler_integrate if config.integrator == "euler" else rk4_integrate


def _assemble_initial_state(problem: BvpProblem, free_start) -> np.ndarray:
    free_idx = [j - 1 for j in problem.bc.free_at_start]
    free_start = np.atleast_1d(np.asarray(free_start, dtype=float))
    if free_start.shape != (len(free_idx),):
        raise ValueError(
            f"free_start has shape {free_start.shape}, expected ({len(free_idx)},)")
    u0 = np.zeros(problem.dimension)
    f0i, f0v = problem.start_values_array()
    u0[f0i] = f0v
    u0[free_idx] = free_start
    return u0


def terminal_mismatch(free_start, problem: BvpProblem, config: ShootingConfig,
                      engine: Optional[str] = None) -> np.ndarray:
    """Integrate from the assembled initial state; return, for each component
    fixed at t_final (ascending index), computed terminal value - prescribed."""
    u0 = _assemble_initial_state(problem, free_start)
    traj = _integrator_fn(config)(problem.system, u0, problem.grid, engine=engine)
    fNi, fNv = problem.end_values_array()
    return traj.values[problem.grid.n_nodes, fNi] - fNv


def solve_shooting(problem: BvpProblem, config: ShootingConfig,
                   engine: Optional[str] = None) -> tuple[Trajectory, ShootingReport]:
    """Find free initial components with |terminal_mismatch|_inf <= root_tol.

    One free component with a sign-changing bracket: bisection.  Otherwise:
    damped Newton with a finite-difference Jacobian, starting from
    config.guess (or the bracket midpoint).  Raises BracketError when the
    bracket does not enclose a sign change and SolverError on
    non-convergence; integration failures propagate.
    """
    n_free = len(problem.bc.free_at_start)
    integrate = _integrator_fn(config)
    lane_name = engine_mod.resolve(problem.system, engine).name

    def final_trajectory(free_vals):
        u0 = _assemble_initial_state(problem, free_vals)
        return integrate(problem.system, u0, problem.grid, engine=engine)

    if n_free == 0:
        traj = final_trajectory(np.empty(0))
        report = ShootingReport(converged=True, iterations=0,
                                final_mismatch_norm=0.0,
                                free_start_values=np.empty(0),
                                method="direct", integrator=config.integrator,
                                engine=lane_name)
        return traj, report

    if n_free == 1 and config.bracket is not None:
        lo = float(np.atleast_1d(np.asarray(config.bracket[0], dtype=float))[0])
        hi = float(np.atleast_1d(np.asarray(config.bracket[1], dtype=float))[0])
        if lo > hi:
            lo, hi = hi, lo
        f_lo = float(terminal_mismatch([lo], problem, config, engine=engine)[0])
        f_hi = float(terminal_mismatch([hi], problem, config, engine=engine)[0])
        for val, mismatch in ((lo, f_lo), (hi, f_hi)):
            if abs(mismatch) <= config.root_tol:
                return final_trajectory([val]), ShootingReport(
                    converged=True, iterations=0, final_mismatch_norm=abs(mismatch),
                    free_start_values=np.array([val]), method="bisection",
                    integrator=config.integrator, engine=lane_name)
        if f_lo * f_hi > 0.0:
            raise BracketError(
                f"no sign change in bracket [{lo:g}, {hi:g}]: "
                f"mismatch({lo:g})={f_lo:.6g}, mismatch({hi:g})={f_hi:.6g}")
        iterations = 0
        mid, f_mid = lo, f_lo
        width_floor = np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
        while iterations < config.max_root_iter:
            mid = 0.5 * (lo + hi)
            f_mid = float(terminal_mismatch([mid], problem, config, engine=engine)[0])
            iterations += 1
            if abs(f_mid) <= config.root_tol:
                break
            if f_lo * f_mid < 0.0:
                hi = mid
            else:
                lo, f_lo = mid, f_mid
            if hi - lo <= width_floor:
                raise SolverError(
                    f"bisection bracket collapsed to width {hi - lo:.3e} with "
                    f"mismatch {f_mid:.3e} > root_tol {config.root_tol:g}")
        if abs(f_mid) > config.root_tol:
            raise SolverError(
                f"bisection did not reach root_tol {config.root_tol:g} in "
                f"{config.max_root_iter} iterations (mismatch {f_mid:.3e})")
        report = ShootingReport(converged=True, iterations=iterations,
                                final_mismatch_norm=abs(f_mid),
                                free_start_values=np.array([mid]),
                                method="bisection", integrator=config.integrator,
                                engine=lane_name)
        return final_trajectory([mid]), report

    if config.guess is not None:
        start = np.atleast_1d(np.asarray(config.guess, dtype=float))
    elif config.bracket is not None:
        a = np.atleast_1d(np.asarray(config.bracket[0], dtype=float))
        b = np.atleast_1d(np.asarray(config.bracket[1], dtype=float))
        start = 0.5 * (a + b)
    else:
        start = np.zeros(n_free)

    result = newton_solve(
        lambda z: terminal_mismatch(z, problem, config, engine=engine),
        start,
        NewtonOptions(tol=config.root_tol, max_iter=config.max_root_iter))
    if not result.converged:
        raise SolverError(
            f"shooting Newton stalled at mismatch {result.final_residual_norm:.3e} "
            f"after {result.iterations} iterations")
    report = ShootingReport(converged=True, iterations=result.iterations,
                            final_mismatch_norm=result.final_residual_norm,
                            free_start_values=result.solution.copy(),
                            method="newton", integrator=config.integrator,
                            engine=lane_name)
    return final_trajectory(result.solution), report
