"""Dense Newton's method for small nonlinear systems.

Finite-difference Jacobians, LU with partial pivoting, and a residual-monotone
damping line search.  Everything works on plain float64 ndarrays and is sized
for the n <= 8 systems appearing in the endpoint solve and the per-node sweep
steps; no sparse or banded machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteError, SingularMatrixError

__all__ = ["NewtonOptions", "NewtonResult", "fd_jacobian", "lu_solve", "newton_solve"]

#: Forward-difference step scale: sqrt of double-precision machine epsilon.
DEFAULT_FD_STEP = math.sqrt(np.finfo(float).eps)

#: Pivot threshold relative to the matrix infinity norm.
SINGULAR_PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class NewtonOptions:
    """Residual max-norm target, iteration cap, FD step and damping cap.

    max_damping_halvings = 0 disables the line search (full steps always).
    """

    tol: float = 1e-10
    max_iter: int = 50
    fd_step_relative: float = DEFAULT_FD_STEP
    max_damping_halvings: int = 30

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")
        if not (0.0 < self.fd_step_relative < 1.0):
            raise ValueError("fd_step_relative must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.max_damping_halvings < 0:
            raise ValueError("max_damping_halvings must be >= 0")


@dataclass(frozen=True)
class NewtonResult:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool
    #: Visited points x_0, x_1, ..., in order (for convergence-rate checks).
    iterates: tuple[np.ndarray, ...] = ()


def fd_jacobian(F: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                step_relative: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Forward-difference Jacobian: column i is (F(x + h_i e_i) - F(x)) / h_i
    with h_i = step_relative * max(1, |x_i|).

    Raises NonFiniteError naming the offending component when F evaluates to
    NaN/Inf at the base point or any perturbed point.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise NonFiniteError(f"F not finite at base point x={x!r}")
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = step_relative * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        fi = np.asarray(F(xp), dtype=float)
        if not np.all(np.isfinite(fi)):
            raise NonFiniteError(f"F not finite when perturbing component {i + 1}")
        J[:, i] = (fi - f0) / h
    return J


def lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting.

    Raises SingularMatrixError when a pivot magnitude falls below
    1e-14 * |A|_inf (an all-zero matrix is reported singular outright).
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got shape {A.shape}")
    if b.shape != (n,):
        raise ValueError(f"b has shape {b.shape}, expected ({n},)")
    norm = float(np.max(np.sum(np.abs(A), axis=1))) if n else 0.0
    if norm == 0.0:
        raise SingularMatrixError("matrix of all zeros")
    threshold = SINGULAR_PIVOT_RTOL * norm
    for col in range(n):
        p = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[p, col]) < threshold:
            raise SingularMatrixError(
                f"pivot {A[p, col]:.3e} below {threshold:.3e} at column {col}")
        if p != col:
            A[[col, p]] = A[[p, col]]
            b[[col, p]] = b[[p, col]]
        for r in range(col + 1, n):
            m = A[r, col] / A[col, col]
            A[r, col] = m
            if m != 0.0:
                A[r, col + 1:] -= m * A[col, col + 1:]
                b[r] -= m * b[col]
    x = np.empty(n)
    for r in range(n - 1, -1, -1):
        x[r] = (b[r] - A[r, r + 1:] @ x[r + 1:]) / A[r, r]
    return x


def _residual_norm(f: np.ndarray) -> float:
    return float(np.max(np.abs(f))) if f.size else 0.0


def newton_solve(F: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                 options: NewtonOptions = NewtonOptions(),
                 jac: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> NewtonResult:
    """Damped Newton iteration on F(x) = 0, stopping on |F(x)|_inf <= tol.

    The Jacobian comes from `jac` when given, otherwise forward differences.
    Each step is halved (up to max_damping_halvings times) while the residual
    max-norm would increase; if every halving still increases it, the smallest
    step is taken anyway and the iteration continues, bounded by max_iter.

    A singular Jacobian raises SingularMatrixError.  Non-convergence within
    max_iter returns converged=False with diagnostics instead of raising.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("x0 is not finite")
    f = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFiniteError("F not finite at the starting point")
    res = _residual_norm(f)
    iterates = [x.copy()]
    iterations = 0
    while res > options.tol and iterations < options.max_iter:
        J = jac(x) if jac is not None else fd_jacobian(F, x, options.fd_step_relative)
        delta = lu_solve(J, f)
        scale = 1.0
        x_new, f_new, res_new = None, None, math.inf
        for _ in range(options.max_damping_halvings + 1):
            x_try = x - scale * delta
            f_try = np.asarray(F(x_try), dtype=float)
            res_try = _residual_norm(f_try) if np.all(np.isfinite(f_try)) else math.inf
            x_new, f_new, res_new = x_try, f_try, res_try
            if res_try < res or res_try <= options.tol or options.max_damping_halvings == 0:
                break
            scale *= 0.5
        if not np.all(np.isfinite(f_new)):
            raise NonFiniteError(
                f"F not finite after damped step at iteration {iterations + 1}")
        x, f, res = x_new, f_new, res_new
        iterations += 1
        iterates.append(x.copy())
    return NewtonResult(
        solution=x,
        iterations=iterations,
        final_residual_norm=res,
        converged=res <= options.tol,
        iterates=tuple(iterates),
    )
