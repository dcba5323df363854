"""Execution-lane selection: compiled extension kernels vs pure-Python reference.

The compiled lane (gmlbvp._ckernels, Cython) only runs systems registered
with a compiled id; anything with a plain Python rhs uses the reference lane.
Selection order for prefer=None/"auto": the GMLBVP_ENGINE environment
variable, then compiled-if-possible, else python.  Both lanes implement the
same arithmetic; see _pykernels for the reference semantics.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels as pk
from .errors import ConfigError, RhsEvaluationError, SweepError
from .problem import OdeSystem

try:
    from . import _ckernels as ck
except ImportError:  # pragma: no cover - exercised only in pure installs
    ck = None

__all__ = ["compiled_available", "resolve", "PythonLane", "CompiledLane"]

ENGINE_ENV_VAR = "GMLBVP_ENGINE"


def compiled_available() -> bool:
    return ck is not None


class PythonLane:
    """Reference kernels driven by the system's Python callables."""

    name = "python"

    def __init__(self, system: OdeSystem):
        self.system = system
        self._rhs = system.rhs
        self._jac = system.jacobian

    def sweep(self, u_end, tilde, d, relax_k, newton_tol, newton_max_iter,
              max_halvings):
        return pk.sweep(self._rhs, self._jac, u_end, tilde, d, relax_k,
                        newton_tol, newton_max_iter, max_halvings)

    def endpoint_correction(self, tilde, d, relax_k):
        return pk.endpoint_correction(self._rhs, tilde, d, relax_k)

    def telescoping_max(self, u, tilde, d, relax_k):
        return pk.telescoping_max(self._rhs, u, tilde, d, relax_k)

    def euler_defect(self, u, d):
        return pk.euler_defect(self._rhs, u, d)

    def euler_path(self, u0, d, n_steps):
        return pk.euler_path(self._rhs, u0, d, n_steps)

    def rk4_path(self, u0, d, n_steps):
        return pk.rk4_path(self._rhs, u0, d, n_steps)

    def outer_run(self, guess, d, relax_k, free0, fixed0_idx, fixed0_val,
                  unkN, fixedN_idx, fixedN_val, outer_tol, max_outer,
                  newton_tol, newton_max_iter, max_halvings, correction_on,
                  collect_diagnostics):
        return pk.outer_run(self._rhs, self._jac, guess, d, relax_k, free0,
                            fixed0_idx, fixed0_val, unkN, fixedN_idx,
                            fixedN_val, outer_tol, max_outer, newton_tol,
                            newton_max_iter, max_halvings, correction_on,
                            collect_diagnostics)


class CompiledLane:
    """Cython kernels addressing the rhs by registered system id."""

    name = "compiled"

    def __init__(self, system: OdeSystem):
        if ck is None:
            raise ConfigError("compiled kernels are not available in this install")
        if system.compiled is None:
            raise ConfigError(
                f"system {system.name or '<anonymous>'!r} has no compiled form; "
                "use the python engine")
        self.system = system
        sid, params = system.compiled
        self._sid = int(sid)
        self._params = np.asarray(params, dtype=float)
        self._dim = system.dimension

    def _raise_for(self, code, node):
        if code == ck.ERR_RHS:
            raise RhsEvaluationError("rhs evaluation failed in compiled kernel",
                                     node=int(node))
        if code == ck.ERR_SWEEP:
            raise SweepError("sweep Newton did not converge in compiled kernel",
                             node=int(node))
        raise RuntimeError(f"unknown compiled-kernel error code {code}")

    def sweep(self, u_end, tilde, d, relax_k, newton_tol, newton_max_iter,
              max_halvings):
        u, code, node = ck.sweep(self._sid, self._params, self._dim,
                                 np.asarray(u_end, dtype=float),
                                 np.ascontiguousarray(tilde, dtype=float),
                                 d, relax_k, newton_tol, newton_max_iter,
                                 max_halvings)
        if code != 0:
            self._raise_for(code, node)
        return u

    def endpoint_correction(self, tilde, d, relax_k):
        E, code, node = ck.endpoint_correction(
            self._sid, self._params, self._dim,
            np.ascontiguousarray(tilde, dtype=float), d, relax_k)
        if code != 0:
            self._raise_for(code, node)
        return E

    def telescoping_max(self, u, tilde, d, relax_k):
        worst, code, node = ck.telescoping_max(
            self._sid, self._params, self._dim,
            np.ascontiguousarray(u, dtype=float),
            np.ascontiguousarray(tilde, dtype=float), d, relax_k)
        if code != 0:
            self._raise_for(code, node)
        return worst

    def euler_defect(self, u, d):
        worst, code, node = ck.euler_defect(
            self._sid, self._params, self._dim,
            np.ascontiguousarray(u, dtype=float), d)
        if code != 0:
            self._raise_for(code, node)
        return worst

    def euler_path(self, u0, d, n_steps):
        u, code, node = ck.euler_path(self._sid, self._params, self._dim,
                                      np.asarray(u0, dtype=float), d, n_steps)
        if code != 0:
            self._raise_for(code, node)
        return u

    def rk4_path(self, u0, d, n_steps):
        u, code, node = ck.rk4_path(self._sid, self._params, self._dim,
                                    np.asarray(u0, dtype=float), d, n_steps)
        if code != 0:
            self._raise_for(code, node)
        return u

    def outer_run(self, guess, d, relax_k, free0, fixed0_idx, fixed0_val,
                  unkN, fixedN_idx, fixedN_val, outer_tol, max_outer,
                  newton_tol, newton_max_iter, max_halvings, correction_on,
                  collect_diagnostics):
        return ck.outer_run(
            self._sid, self._params, self._dim,
            np.ascontiguousarray(guess, dtype=float), d, relax_k,
            np.asarray(free0, dtype=np.intp),
            np.asarray(fixed0_idx, dtype=np.intp),
            np.asarray(fixed0_val, dtype=float),
            np.asarray(unkN, dtype=np.intp),
            np.asarray(fixedN_idx, dtype=np.intp),
            np.asarray(fixedN_val, dtype=float),
            outer_tol, max_outer, newton_tol, newton_max_iter, max_halvings,
            1 if correction_on else 0, 1 if collect_diagnostics else 0)


def resolve(system: OdeSystem, prefer: str | None = None):
    """Pick the execution lane for a system.

    prefer: None/"auto" (env var, then compiled when possible), "python",
    or "compiled" (raises ConfigError when impossible).
    """
    if prefer in (None, "auto"):
        prefer = os.environ.get(ENGINE_ENV_VAR, "auto").lower() or "auto"
    if prefer == "python":
        return PythonLane(system)
    if prefer == "compiled":
        return CompiledLane(system)
    if prefer == "auto":
        if ck is not None and system.compiled is not None:
            return CompiledLane(system)
        return PythonLane(system)
    raise ConfigError(f"unknown engine {prefer!r}; use auto, python or compiled")
