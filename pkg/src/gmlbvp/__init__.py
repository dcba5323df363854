"""gmlbvp: proximal-relaxation solver for two-point boundary value problems.

Core pieces: problem/solution types (gmlbvp.problem), a dense Newton kernel
(gmlbvp.newton), the relaxed-equation solver with its endpoint system and
backward sweep (gmlbvp.solver), an airplane-climb model (gmlbvp.flight), an
independent shooting oracle (gmlbvp.shooting), and a CLI (gmlbvp.cli).  Hot
loops run in a Cython extension when built, with a pure-Python fallback;
see gmlbvp.engine.
"""

from .engine import compiled_available
from .errors import (BoundaryConditionError, BracketError, ConfigError,
                     DivergenceError, EndpointSolveError, FlightDomainError,
                     GmlBvpError, GridError, InputError, NonFiniteError,
                     RhsEvaluationError, SingularMatrixError, SolverError,
                     SweepError, TrajectoryError)
from .flight import (A320, FlightParams, FlightState, air_density, drag,
                     drag_coefficient, flight_rhs, flight_rhs_jacobian,
                     flight_system, lift, lift_coefficient, make_flight_problem)
from .newton import (NewtonOptions, NewtonResult, fd_jacobian, lu_solve,
                     newton_solve)
from .problem import (BoundaryConditions, BvpProblem, Grid, OdeSystem,
                      RelaxationParams, SolveReport, Trajectory, make_grid,
                      validate_boundary_conditions)
from .shooting import (ShootingConfig, ShootingReport, euler_integrate,
                       rk4_integrate, solve_shooting, terminal_mismatch)
from .solver import (EndpointUnknowns, backward_step_residual, backward_sweep,
                     endpoint_error_correction, endpoint_residual,
                     error_term, euler_residual_norm, initial_guess,
                     outer_iterate, solve_endpoint, telescoping_identity_check)
from .systems import get_system, registered_systems

__version__ = "0.1.0"
