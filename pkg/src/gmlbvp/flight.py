"""In-plane airplane climb model: atmosphere, lift/drag, and the 4-state rhs.

State layout (1-based component labels used in boundary conditions and CSV):
u1 = altitude h [m], u2 = path angle gamma [rad], u3 = speed V [m/s],
u4 = horizontal position x [m].  All defaults are the canonical A320-class
climb constants; SI units throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FlightDomainError
from .problem import BoundaryConditions, BvpProblem, OdeSystem, RelaxationParams, make_grid

__all__ = [
    "FlightParams",
    "FlightState",
    "A320",
    "air_density",
    "lift_coefficient",
    "drag_coefficient",
    "lift",
    "drag",
    "flight_rhs",
    "flight_rhs_jacobian",
    "flight_system",
    "make_flight_problem",
    "CLIMB_T_FINAL",
    "CLIMB_BOUNDARY_CONDITIONS",
    "CLIMB_FREE_START_DEFAULTS",
]

#: Speed below which the rhs refuses to evaluate (f2 divides by V).
SPEED_FLOOR = 1e-6

#: Altitude at which the density base term reaches zero (288.15 / 0.0065 m).
DENSITY_CEILING = 288.15 / 0.0065

#: Canonical climb horizon [s]; fixed for the preset problem.
CLIMB_T_FINAL = 532.0


@dataclass(frozen=True)
class FlightParams:
    """Aircraft and environment constants (defaults: the A320-class climb case)."""

    mass: float = 120000.0            # kg
    wing_area: float = 260.0          # m^2
    angle_of_attack: float = 0.0945   # rad, constant (not a control schedule)
    thrust_offset: float = 0.03225    # rad, thrust line vs velocity axis
    gravity: float = 9.8              # m/s^2
    cd0: float = 0.0175
    k1: float = 0.0
    k2: float = 0.06
    cl_alpha: float = 5.0             # 1/rad
    thrust: float = 240000.0          # N

    def __post_init__(self):
        if self.mass <= 0.0 or self.wing_area <= 0.0:
            raise ValueError("mass and wing_area must be positive")
        if self.thrust < 0.0 or self.gravity <= 0.0:
            raise ValueError("thrust must be >= 0 and gravity > 0")


A320 = FlightParams()


@dataclass(frozen=True)
class FlightState:
    altitude: float
    path_angle: float
    speed: float
    downrange: float

    def as_array(self) -> np.ndarray:
        return np.array([self.altitude, self.path_angle, self.speed, self.downrange])

    @classmethod
    def from_array(cls, u) -> "FlightState":
        h, gamma, v, x = (float(c) for c in u)
        return cls(altitude=h, path_angle=gamma, speed=v, downrange=x)


def air_density(altitude: float) -> float:
    """rho(h) = 1.225 * (1 - 0.0065 h / 288.15)^4.225 [kg/m^3].

    Defined only below the zero-base altitude (~44331 m); raises
    FlightDomainError at or above it.
    """
    base = 1.0 - 0.0065 * altitude / 288.15
    if base <= 0.0:
        raise FlightDomainError(
            f"altitude {altitude!r} m at or above the density model ceiling "
            f"({DENSITY_CEILING:.1f} m)")
    return 1.225 * base ** 4.225


def lift_coefficient(params: FlightParams = A320) -> float:
    """C_L from the lift-curve slope at the fixed angle of attack."""
    return params.cl_alpha * params.angle_of_attack


def drag_coefficient(params: FlightParams = A320) -> float:
    """Drag polar C_D = C_D0 + K1*C_L + K2*C_L^2."""
    cl = lift_coefficient(params)
    return params.cd0 + params.k1 * cl + params.k2 * cl * cl


def _dynamic_pressure_area(altitude: float, speed: float, params: FlightParams) -> float:
    return 0.5 * air_density(altitude) * speed * speed * params.wing_area


def lift(state: FlightState, params: FlightParams = A320) -> float:
    """L = 1/2 rho(h) V^2 C_L S [N]."""
    return _dynamic_pressure_area(state.altitude, state.speed, params) * lift_coefficient(params)


def drag(state: FlightState, params: FlightParams = A320) -> float:
    """D = 1/2 rho(h) V^2 C_D S [N]."""
    return _dynamic_pressure_area(state.altitude, state.speed, params) * drag_coefficient(params)


def _rhs_array(u, params: FlightParams) -> np.ndarray:
    h = float(u[0])
    gamma = float(u[1])
    v = float(u[2])
    if v < SPEED_FLOOR:
        raise FlightDomainError(
            f"speed {v!r} m/s below floor {SPEED_FLOOR:g} at state "
            f"(h={h!r}, gamma={gamma!r}, V={v!r}, x={float(u[3])!r})")
    rho = air_density(h)
    q_area = 0.5 * rho * v * v * params.wing_area
    lift_force = q_area * lift_coefficient(params)
    drag_force = q_area * drag_coefficient(params)
    sin_g = math.sin(gamma)
    cos_g = math.cos(gamma)
    thrust_angle = params.angle_of_attack + params.thrust_offset
    m = params.mass
    g = params.gravity
    f = params.thrust
    return np.array([
        v * sin_g,
        (f * math.sin(thrust_angle) + lift_force) / (m * v) - (g / v) * cos_g,
        (f * math.cos(thrust_angle) - drag_force) / m - g * sin_g,
        v * cos_g,
    ])


def flight_rhs(state, params: FlightParams = A320) -> np.ndarray:
    """Climb dynamics (dh/dt, dgamma/dt, dV/dt, dx/dt) at a state.

    Accepts a FlightState or any length-4 array-like (h, gamma, V, x).
    Requires V >= 1e-6 m/s and altitude below the density ceiling.
    """
    if isinstance(state, FlightState):
        return _rhs_array(state.as_array(), params)
    return _rhs_array(np.asarray(state, dtype=float), params)


def flight_rhs_jacobian(u, params: FlightParams = A320) -> np.ndarray:
    """Analytic 4x4 Jacobian of flight_rhs with respect to the state."""
    if isinstance(u, FlightState):
        u = u.as_array()
    h = float(u[0])
    gamma = float(u[1])
    v = float(u[2])
    if v < SPEED_FLOOR:
        raise FlightDomainError(f"speed {v!r} m/s below floor {SPEED_FLOOR:g}")
    base = 1.0 - 0.0065 * h / 288.15
    if base <= 0.0:
        raise FlightDomainError(f"altitude {h!r} m above the density model ceiling")
    rho = 1.225 * base ** 4.225
    drho = 1.225 * 4.225 * base ** 3.225 * (-0.0065 / 288.15)
    cl = lift_coefficient(params)
    cd = drag_coefficient(params)
    s = params.wing_area
    m = params.mass
    g = params.gravity
    f = params.thrust
    sin_g = math.sin(gamma)
    cos_g = math.cos(gamma)
    sin_t = math.sin(params.angle_of_attack + params.thrust_offset)
    lift_force = 0.5 * rho * v * v * s * cl
    J = np.zeros((4, 4))
    J[0, 1] = v * cos_g
    J[0, 2] = sin_g
    J[1, 0] = (0.5 * drho * v * v * s * cl) / (m * v)
    J[1, 1] = (g / v) * sin_g
    J[1, 2] = (0.5 * rho * s * cl) / m - (f * sin_t + lift_force) / (m * v * v) \
        + (g / (v * v)) * cos_g
    J[2, 0] = -(0.5 * drho * v * v * s * cd) / m
    J[2, 1] = -g * cos_g
    J[2, 2] = -(rho * v * s * cd) / m
    J[3, 1] = -v * sin_g
    J[3, 2] = cos_g
    return J


#: Compiled-kernel system id for the flight rhs (see _ckernels / systems).
FLIGHT_SYSTEM_ID = 3


def _compiled_params(params: FlightParams) -> tuple[float, ...]:
    return (params.mass, params.wing_area, params.angle_of_attack,
            params.thrust_offset, params.gravity, params.cd0, params.k1,
            params.k2, params.cl_alpha, params.thrust)


def flight_system(params: FlightParams = A320) -> OdeSystem:
    """The climb model packaged as an OdeSystem (analytic Jacobian attached)."""
    return OdeSystem(
        dimension=4,
        rhs=lambda u, t: _rhs_array(np.asarray(u, dtype=float), params),
        jacobian=lambda u: flight_rhs_jacobian(u, params),
        name="a320-flight",
        compiled=(FLIGHT_SYSTEM_ID, _compiled_params(params)),
    )


#: Canonical climb boundary conditions: h(0)=0, V(0)=150, x(0)=0, h(t_f)=11000.
CLIMB_BOUNDARY_CONDITIONS = {
    "fixed_at_start": {1: 0.0, 3: 150.0, 4: 0.0},
    "fixed_at_end": {1: 11000.0},
}

#: Initial-guess default for the free path-angle component.
CLIMB_FREE_START_DEFAULTS = {2: 0.05}


def make_flight_problem(params: FlightParams = A320, n_nodes: int = 3000,
                        relax_k: float = 509.0,
                        **relaxation_overrides) -> tuple[BvpProblem, RelaxationParams]:
    """Canonical climb problem on [0, 532] s plus its relaxation settings.

    The horizon is fixed at 532 s (build custom horizons through the core
    types directly); n_nodes and the relaxation settings may be overridden.
    """
    bc = BoundaryConditions(
        dimension=4,
        fixed_at_start=CLIMB_BOUNDARY_CONDITIONS["fixed_at_start"],
        fixed_at_end=CLIMB_BOUNDARY_CONDITIONS["fixed_at_end"],
    )
    problem = BvpProblem(system=flight_system(params), bc=bc,
                         grid=make_grid(n_nodes, CLIMB_T_FINAL))
    relax = RelaxationParams(relax_k=relax_k, **relaxation_overrides)
    return problem, relax
