"""Registry of right-hand sides selectable by name (CLI configs, tests).

Config files cannot define functions; they pick from this registry.  Each
registered system carries both the Python callables and the compiled-kernel
id so either execution lane can run it.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .flight import FlightParams, flight_system
from .problem import OdeSystem

__all__ = ["get_system", "registered_systems"]

ZERO_ID = 0
SCALAR_LINEAR_ID = 1
OSCILLATOR_ID = 2


def _zero_system(dimension: int = 1) -> OdeSystem:
    dimension = int(dimension)
    if dimension < 1:
        raise ConfigError("zero system dimension must be >= 1")
    return OdeSystem(
        dimension=dimension,
        rhs=lambda u, t: np.zeros(dimension),
        jacobian=lambda u: np.zeros((dimension, dimension)),
        name="zero",
        compiled=(ZERO_ID, ()),
    )


def _scalar_linear_system(rate: float = 1.0, offset: float = 0.0) -> OdeSystem:
    rate = float(rate)
    offset = float(offset)
    return OdeSystem(
        dimension=1,
        rhs=lambda u, t: np.array([rate * u[0] + offset]),
        jacobian=lambda u: np.array([[rate]]),
        name="scalar-linear",
        compiled=(SCALAR_LINEAR_ID, (rate, offset)),
    )


def _oscillator_system() -> OdeSystem:
    return OdeSystem(
        dimension=2,
        rhs=lambda u, t: np.array([u[1], -u[0]]),
        jacobian=lambda u: np.array([[0.0, 1.0], [-1.0, 0.0]]),
        name="harmonic-oscillator",
        compiled=(OSCILLATOR_ID, ()),
    )


def _flight(**params) -> OdeSystem:
    return flight_system(FlightParams(**params))


_REGISTRY = {
    "zero": _zero_system,
    "scalar-linear": _scalar_linear_system,
    "harmonic-oscillator": _oscillator_system,
    "a320-flight": _flight,
}


def registered_systems() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def get_system(name: str, **params) -> OdeSystem:
    """Instantiate a registered system by name with optional parameters."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unknown system {name!r}; registered: {', '.join(registered_systems())}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for system {name!r}: {exc}") from None
