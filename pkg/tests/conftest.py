import math

import pytest

from gmlbvp import (BoundaryConditions, BvpProblem, RelaxationParams,
                    compiled_available, get_system, make_grid)


def oscillator_problem(n_nodes=100, t_final=math.pi / 2):
    """u1' = u2, u2' = -u1; u1(0)=0, u1(t_final)=1, u2 free at start."""
    return BvpProblem(
        system=get_system("harmonic-oscillator"),
        bc=BoundaryConditions(dimension=2, fixed_at_start={1: 0.0},
                              fixed_at_end={1: 1.0}),
        grid=make_grid(n_nodes, t_final),
    )


def scalar_problem(rate=1.0, offset=0.0, n_nodes=10, t_final=1.0,
                   fixed_at_start=None, fixed_at_end=None):
    return BvpProblem(
        system=get_system("scalar-linear", rate=rate, offset=offset),
        bc=BoundaryConditions(dimension=1,
                              fixed_at_start=fixed_at_start or {},
                              fixed_at_end=fixed_at_end or {}),
        grid=make_grid(n_nodes, t_final),
    )


def zero_problem(dimension=2, n_nodes=10, t_final=1.0, fixed_at_start=None,
                 fixed_at_end=None):
    return BvpProblem(
        system=get_system("zero", dimension=dimension),
        bc=BoundaryConditions(dimension=dimension,
                              fixed_at_start=fixed_at_start or {},
                              fixed_at_end=fixed_at_end or {}),
        grid=make_grid(n_nodes, t_final),
    )


def small_params(relax_k=15.0, outer_tol=1e-11, max_outer_iter=4000,
                 newton_tol=1e-12, newton_max_iter=50):
    return RelaxationParams(relax_k=relax_k, outer_tol=outer_tol,
                            max_outer_iter=max_outer_iter,
                            newton_tol=newton_tol,
                            newton_max_iter=newton_max_iter)


needs_compiled = pytest.mark.skipif(
    not compiled_available(),
    reason="compiled kernels not built; install with the Cython extension")
