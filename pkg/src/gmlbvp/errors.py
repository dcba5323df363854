"""Exception taxonomy for gmlbvp.

Input/validation problems raise :class:`InputError` subclasses; a run that
starts but cannot meet its target raises a :class:`SolverError` subclass.
The CLI maps the first family to exit code 1 and the second to exit code 2.
"""


class GmlBvpError(Exception):
    """Base class for every error raised by this package."""


class InputError(GmlBvpError):
    """Invalid user input: grids, boundary conditions, configs, files."""


class GridError(InputError):
    pass


class BoundaryConditionError(InputError):
    pass


class TrajectoryError(InputError):
    pass


class ConfigError(InputError):
    pass


class SolverError(GmlBvpError):
    """A solve ran but failed (Newton death, divergence, no bracket...)."""


class SingularMatrixError(SolverError):
    """LU elimination met a pivot below the singularity threshold."""


class NonFiniteError(SolverError):
    """A function evaluation produced NaN/Inf where a finite value was required."""


class RhsEvaluationError(SolverError):
    """Right-hand-side evaluation failed; carries node context when available."""

    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


class FlightDomainError(RhsEvaluationError):
    """Flight model evaluated outside its physical domain (V too small, rho undefined)."""


class EndpointSolveError(SolverError):
    """Newton on the endpoint system failed; carries the unknown vector at failure."""

    def __init__(self, message, unknowns=None, residual_norm=None):
        super().__init__(message)
        self.unknowns = unknowns
        self.residual_norm = residual_norm


class SweepError(SolverError):
    """Newton failed at one node of the backward sweep."""

    def __init__(self, message, node):
        super().__init__(f"{message} (node {node})")
        self.node = node


class DivergenceError(SolverError):
    """Outer iteration update norm exceeded the divergence guard."""


class BracketError(SolverError):
    """Shooting bracket does not enclose a sign change."""
