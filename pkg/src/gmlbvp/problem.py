"""Problem-definition and solution data types shared by the solver, oracle and CLI.

Component indices in user-facing maps (boundary conditions, free-start
defaults, diagnostics) are 1-based, matching the u_1..u_n naming convention
used throughout; internal array storage is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import BoundaryConditionError, GridError, TrajectoryError

__all__ = [
    "Grid",
    "BoundaryConditions",
    "OdeSystem",
    "Trajectory",
    "RelaxationParams",
    "SolveReport",
    "BvpProblem",
    "make_grid",
    "validate_boundary_conditions",
]


@dataclass(frozen=True)
class Grid:
    """Uniform time grid on [0, t_final] with n_nodes steps (n_nodes+1 nodes).

    The step is always recomputed from the two stored fields, so the identity
    step = t_final / n_nodes holds by construction.
    """

    n_nodes: int
    t_final: float

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2:
            raise GridError(f"n_nodes must be an integer >= 2, got {self.n_nodes!r}")
        if not (self.t_final > 0.0) or not np.isfinite(self.t_final):
            raise GridError(f"t_final must be a positive finite real, got {self.t_final!r}")

    @property
    def step(self) -> float:
        return self.t_final / self.n_nodes

    def node_time(self, k: int) -> float:
        return k * self.step

    def times(self) -> np.ndarray:
        return np.arange(self.n_nodes + 1) * self.step


def make_grid(n_nodes: int, t_final: float) -> Grid:
    """Build a uniform grid; rejects n_nodes < 2 or t_final <= 0."""
    return Grid(n_nodes=n_nodes, t_final=float(t_final))


@dataclass(frozen=True)
class BoundaryConditions:
    """Separated two-point boundary conditions.

    fixed_at_start / fixed_at_end map 1-based component indices to prescribed
    values at t=0 and t=t_final.  A well-posed set has exactly `dimension`
    conditions in total; the components free at t=0 are the unknowns of the
    endpoint system together with the components not fixed at t=t_final.
    """

    dimension: int
    fixed_at_start: Mapping[int, float]
    fixed_at_end: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "fixed_at_start", dict(self.fixed_at_start))
        object.__setattr__(self, "fixed_at_end", dict(self.fixed_at_end))

    @property
    def free_at_start(self) -> tuple[int, ...]:
        """1-based indices not fixed at t=0, ascending."""
        return tuple(j for j in range(1, self.dimension + 1) if j not in self.fixed_at_start)

    @property
    def unknown_at_end(self) -> tuple[int, ...]:
        """1-based indices not fixed at t=t_final, ascending."""
        return tuple(j for j in range(1, self.dimension + 1) if j not in self.fixed_at_end)


def validate_boundary_conditions(bc: BoundaryConditions) -> None:
    """Check the counting invariant; raise BoundaryConditionError when ill-posed.

    Requires every index in 1..dimension and
    count(fixed_at_start) + count(fixed_at_end) == dimension, which also makes
    the number of free-at-start components equal the number fixed at the end.
    """
    n = bc.dimension
    if n < 1:
        raise BoundaryConditionError(f"dimension must be positive, got {n}")
    for label, mapping in (("fixed_at_start", bc.fixed_at_start),
                           ("fixed_at_end", bc.fixed_at_end)):
        for j, val in mapping.items():
            if int(j) != j or not (1 <= j <= n):
                raise BoundaryConditionError(
                    f"{label} index {j!r} out of range 1..{n}")
            if not np.isfinite(val):
                raise BoundaryConditionError(f"{label}[{j}] is not finite: {val!r}")
    total = len(bc.fixed_at_start) + len(bc.fixed_at_end)
    if total < n:
        raise BoundaryConditionError(
            f"under-determined: {total} conditions for dimension {n}")
    if total > n:
        raise BoundaryConditionError(
            f"over-determined: {total} conditions for dimension {n}")


@dataclass(frozen=True)
class OdeSystem:
    """First-order autonomous-friendly ODE system u' = rhs(u, t).

    rhs maps (state vector of length `dimension`, time) to the derivative
    vector.  `jacobian`, when provided, maps the state vector to the n x n
    matrix d(rhs)/du and must agree with a finite-difference Jacobian of rhs
    to within FD truncation error.  `compiled` is an optional
    (system_id, params) token letting the compiled kernels evaluate the same
    rhs without calling back into Python; registered systems set it.
    """

    dimension: int
    rhs: Callable[[np.ndarray, float], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    compiled: Optional[tuple[int, tuple[float, ...]]] = None


@dataclass(frozen=True)
class Trajectory:
    """State values on every node of a grid: row k is the state at t = k*step."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise TrajectoryError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[0] != self.grid.n_nodes + 1:
            raise TrajectoryError(
                f"expected {self.grid.n_nodes + 1} rows for n_nodes={self.grid.n_nodes}, "
                f"got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise TrajectoryError(
                f"non-finite entry at node {bad[0]}, component {bad[1] + 1}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def state(self, k: int) -> np.ndarray:
        return self.values[k]


@dataclass(frozen=True)
class RelaxationParams:
    """Outer-iteration settings: relaxation constant K and stopping controls.

    relax_k must exceed 1 (the scheme divides by K and scales the previous
    iterate's increments by (K-1)/K).  Defaults follow the canonical climb
    configuration (K=509) with outer_tol on the relative sup-norm of the
    outer update and an absolute max-norm Newton tolerance.
    """

    relax_k: float = 509.0
    outer_tol: float = 1e-8
    max_outer_iter: int = 20000
    newton_tol: float = 1e-10
    newton_max_iter: int = 50

    def __post_init__(self):
        if not self.relax_k > 1.0:
            raise ValueError(f"relax_k must be > 1, got {self.relax_k!r}")
        for name in ("outer_tol", "newton_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        for name in ("max_outer_iter", "newton_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


@dataclass
class SolveReport:
    """Outcome of one outer_iterate run.

    residual_history holds the per-iteration relative update norms
    max |u - u_tilde| / (1 + |u|); endpoint_discrepancy_history records
    max |swept u_0 - endpoint u_0| per iteration (the "K sufficiently big"
    approximation gauge); telescoping_history is filled only when the run
    collects diagnostics.
    """

    converged: bool = False
    outer_iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    newton_failures: int = 0
    final_euler_residual: float = float("nan")
    endpoint_discrepancy_history: list[float] = field(default_factory=list)
    telescoping_history: list[float] = field(default_factory=list)
    engine: str = ""
    termination: str = ""
    wall_time: float = 0.0


@dataclass(frozen=True)
class BvpProblem:
    """An ODE system plus separated boundary conditions on a grid."""

    system: OdeSystem
    bc: BoundaryConditions
    grid: Grid

    def __post_init__(self):
        if self.system.dimension != self.bc.dimension:
            raise BoundaryConditionError(
                f"system dimension {self.system.dimension} != "
                f"boundary-condition dimension {self.bc.dimension}")
        validate_boundary_conditions(self.bc)

    @property
    def dimension(self) -> int:
        return self.system.dimension

    def start_values_array(self) -> tuple[np.ndarray, np.ndarray]:
        """(0-based indices, values) of the components fixed at t=0."""
        idx = sorted(self.bc.fixed_at_start)
        return (np.array([j - 1 for j in idx], dtype=np.intp),
                np.array([self.bc.fixed_at_start[j] for j in idx], dtype=float))

    def end_values_array(self) -> tuple[np.ndarray, np.ndarray]:
        """(0-based indices, values) of the components fixed at t=t_final."""
        idx = sorted(self.bc.fixed_at_end)
        return (np.array([j - 1 for j in idx], dtype=np.intp),
                np.array([self.bc.fixed_at_end[j] for j in idx], dtype=float))
