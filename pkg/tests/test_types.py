import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmlbvp import (BoundaryConditions, BoundaryConditionError, GridError,
                    RelaxationParams, Trajectory, TrajectoryError, make_grid,
                    validate_boundary_conditions)

EPS = np.finfo(float).eps


class TestGrid:
    def test_canonical_climb_grid(self):
        grid = make_grid(3000, 532.0)
        assert grid.step == 532.0 / 3000.0
        assert abs(grid.step - 0.17733333333333334) < 1e-15

    def test_exact_division(self):
        assert make_grid(2, 1.0).step == 0.5

    def test_step_times_nodes_recovers_t_final(self):
        grid = make_grid(7, 1.0)
        assert abs(grid.step * 7 - 1.0) <= EPS

    def test_node_times(self):
        grid = make_grid(4, 2.0)
        assert grid.node_time(0) == 0.0
        assert grid.node_time(4) == 2.0
        assert np.allclose(grid.times(), [0.0, 0.5, 1.0, 1.5, 2.0])

    @pytest.mark.parametrize("n_nodes,t_final", [
        (1, 1.0), (0, 1.0), (-3, 1.0), (10, 0.0), (10, -2.0),
        (10, math.inf), (10, math.nan),
    ])
    def test_rejects_bad_arguments(self, n_nodes, t_final):
        with pytest.raises(GridError):
            make_grid(n_nodes, t_final)

    @given(n_nodes=st.integers(min_value=2, max_value=100000),
           t_final=st.floats(min_value=1e-6, max_value=1e6,
                             allow_nan=False, allow_infinity=False))
    @settings(max_examples=200, deadline=None)
    def test_step_identity_property(self, n_nodes, t_final):
        grid = make_grid(n_nodes, t_final)
        assert abs(grid.t_final - grid.n_nodes * grid.step) <= 4 * EPS * grid.t_final


class TestBoundaryConditions:
    def test_climb_pattern_is_valid(self):
        bc = BoundaryConditions(dimension=4,
                                fixed_at_start={1: 0.0, 3: 150.0, 4: 0.0},
                                fixed_at_end={1: 11000.0})
        validate_boundary_conditions(bc)
        assert bc.free_at_start == (2,)
        assert bc.unknown_at_end == (2, 3, 4)

    def test_pure_initial_value_problem_is_valid(self):
        bc = BoundaryConditions(dimension=4,
                                fixed_at_start={1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0},
                                fixed_at_end={})
        validate_boundary_conditions(bc)
        assert bc.free_at_start == ()
        assert bc.unknown_at_end == (1, 2, 3, 4)

    def test_under_determined_rejected(self):
        bc = BoundaryConditions(dimension=4, fixed_at_start={1: 0.0, 2: 0.0},
                                fixed_at_end={1: 1.0})
        with pytest.raises(BoundaryConditionError, match="under-determined"):
            validate_boundary_conditions(bc)

    def test_over_determined_rejected(self):
        bc = BoundaryConditions(dimension=2, fixed_at_start={1: 0.0, 2: 0.0},
                                fixed_at_end={1: 1.0})
        with pytest.raises(BoundaryConditionError, match="over-determined"):
            validate_boundary_conditions(bc)

    def test_index_out_of_range_rejected(self):
        bc = BoundaryConditions(dimension=2, fixed_at_start={0: 1.0},
                                fixed_at_end={2: 1.0})
        with pytest.raises(BoundaryConditionError, match="out of range"):
            validate_boundary_conditions(bc)
        bc = BoundaryConditions(dimension=2, fixed_at_start={1: 1.0},
                                fixed_at_end={3: 1.0})
        with pytest.raises(BoundaryConditionError, match="out of range"):
            validate_boundary_conditions(bc)

    def test_same_component_fixed_at_both_ends(self):
        # the oscillator benchmark pattern: u1 pinned twice, u2 never
        bc = BoundaryConditions(dimension=2, fixed_at_start={1: 0.0},
                                fixed_at_end={1: 1.0})
        validate_boundary_conditions(bc)
        assert bc.free_at_start == (2,)
        assert bc.unknown_at_end == (2,)

    @given(n=st.integers(min_value=1, max_value=6), data=st.data())
    @settings(max_examples=200, deadline=None)
    def test_accepts_iff_counts_sum_to_dimension(self, n, data):
        start = data.draw(st.sets(st.integers(1, n)))
        end = data.draw(st.sets(st.integers(1, n)))
        bc = BoundaryConditions(dimension=n,
                                fixed_at_start={j: 0.0 for j in start},
                                fixed_at_end={j: 1.0 for j in end})
        if len(start) + len(end) == n:
            validate_boundary_conditions(bc)
        else:
            with pytest.raises(BoundaryConditionError):
                validate_boundary_conditions(bc)


class TestTrajectory:
    def test_row_count_enforced(self):
        grid = make_grid(5, 1.0)
        Trajectory(grid=grid, values=np.zeros((6, 2)))
        for rows in (5, 7, 1):
            with pytest.raises(TrajectoryError):
                Trajectory(grid=grid, values=np.zeros((rows, 2)))

    def test_non_finite_rejected(self):
        grid = make_grid(2, 1.0)
        values = np.zeros((3, 2))
        values[1, 1] = np.nan
        with pytest.raises(TrajectoryError, match="node 1, component 2"):
            Trajectory(grid=grid, values=values)
        values[1, 1] = np.inf
        with pytest.raises(TrajectoryError):
            Trajectory(grid=grid, values=values)

    def test_values_are_read_only(self):
        traj = Trajectory(grid=make_grid(2, 1.0), values=np.zeros((3, 1)))
        with pytest.raises(ValueError):
            traj.values[0, 0] = 1.0

    def test_values_are_copied(self):
        src = np.zeros((3, 1))
        traj = Trajectory(grid=make_grid(2, 1.0), values=src)
        src[0, 0] = 42.0
        assert traj.values[0, 0] == 0.0


class TestRelaxationParams:
    def test_defaults_match_canonical_run(self):
        params = RelaxationParams()
        assert params.relax_k == 509.0
        assert params.outer_tol == 1e-8
        assert params.newton_tol == 1e-10

    @pytest.mark.parametrize("kwargs", [
        {"relax_k": 1.0}, {"relax_k": 0.5}, {"outer_tol": 0.0},
        {"newton_tol": -1e-3}, {"max_outer_iter": 0}, {"newton_max_iter": 0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            RelaxationParams(**kwargs)
