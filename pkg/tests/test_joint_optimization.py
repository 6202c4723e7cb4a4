# Tests of the joint group optimization: initial guesses, the stacked
# variable layout, the solver, the nominal post-check and the reweighting
# loop that ends in an emergency stop.
#
# Created by: Andy Carter, PE
# Created - 2024.04.10
# Last revised - 2024.05.27
#
# swarm-group-plan - tests


# ************************************************************
import numpy as np
import pytest

from grid_map_3d import (fn_add_pillar, fn_build_distance_field, fn_empty_map,
                         fn_is_occupied, fn_world_to_cell)
from joint_optimization import (EmergencyStop, GroupPlanProblem, fn_braking_trajectory,
                                fn_escalate_weights, fn_init_from_path, fn_joint_objective,
                                fn_local_goal, fn_optimize_group, fn_pack_variables,
                                fn_post_check, fn_prune_path, fn_solve_group_problem,
                                fn_straight_initial_guess, fn_trapezoid_time,
                                fn_unpack_variables, SafetyReport)
from minco_trajectory import MincoTrajectory, fn_boundary_state, fn_evaluate
from penalty_terms import (INT_FEASIBILITY, INT_RECIPROCAL, LIST_TERM_NAMES,
                           PenaltyWeights)
from planner_errors import ContractError, SolverError
# ************************************************************


# ------------------------------------------------------------
def fn_line(arr_a, arr_b, flt_T):
    arr_a = np.asarray(arr_a, dtype=float)
    arr_b = np.asarray(arr_b, dtype=float)
    arr_v = (arr_b - arr_a) / flt_T
    return MincoTrajectory(np.zeros((0, 3)), [flt_T],
                           fn_boundary_state(arr_a, arr_v), fn_boundary_state(arr_b, arr_v))


def fn_rest_guess(arr_a, arr_b, int_pieces=1):
    return fn_straight_initial_guess(fn_boundary_state(arr_a), fn_boundary_state(arr_b),
                                     1.36, 6.2, int_pieces)
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def test_trapezoid_time():
    assert fn_trapezoid_time(0.0, 1.7, 6.2) == 0.0
    assert fn_trapezoid_time(30.0, 1.7, 6.2) == pytest.approx(30.0 / 1.7 + 1.7 / 6.2)
    # too short to reach cruise speed
    assert fn_trapezoid_time(0.1, 1.7, 6.2) == pytest.approx(2.0 * np.sqrt(0.1 / 6.2))


def test_init_from_straight_path():
    list_points = [(0.0, 0.0, 1.0), (15.0, 0.0, 1.0), (30.0, 0.0, 1.0)]
    arr_q, arr_T = fn_init_from_path(list_points, fn_boundary_state(list_points[0]),
                                     fn_boundary_state(list_points[-1]), 1.7, 6.2)
    assert arr_q == pytest.approx(np.array([[15.0, 0.0, 1.0]]))
    assert np.sum(arr_T) == pytest.approx(30.0 / 1.7 + 1.7 / 6.2)
    assert arr_T[0] == pytest.approx(arr_T[1])


def test_init_splits_to_min_pieces():
    arr_q, arr_T = fn_init_from_path([(0, 0, 1), (8, 0, 1)], fn_boundary_state((0, 0, 1)),
                                     fn_boundary_state((8, 0, 1)), 1.7, 6.2, int_min_pieces=3)
    assert arr_q == pytest.approx(np.array([[2.0, 0.0, 1.0], [4.0, 0.0, 1.0]]))
    assert arr_T == pytest.approx(np.sum(arr_T) * np.array([0.25, 0.25, 0.5]))


def test_init_at_goal_has_positive_duration():
    arr_q, arr_T = fn_init_from_path([(1, 1, 1)], fn_boundary_state((1, 1, 1)),
                                     fn_boundary_state((1, 1, 1)), 1.7, 6.2)
    assert arr_q.shape == (0, 3)
    assert np.all(arr_T > 0.0)


def test_prune_keeps_corner_only_when_blocked():
    list_points = [(0.5, 0.5, 1.0), (3.5, 0.5, 1.0), (3.5, 3.5, 1.0)]
    grid = fn_empty_map((0, 0, 0), (4, 4, 2), 0.1)
    assert len(fn_prune_path(list_points, grid)) == 2

    fn_add_pillar(grid, (2.0, 2.0), 0.3)
    list_pruned = fn_prune_path(list_points, grid)
    assert len(list_pruned) == 3
    assert list_pruned[1] == pytest.approx([3.5, 0.5, 1.0])


def test_local_goal():
    arr_goal = fn_local_goal((0, 0, 1), (3, 4, 1), 10.0)
    assert arr_goal == pytest.approx([3.0, 4.0, 1.0])

    arr_goal = fn_local_goal((0, 0, 1), (30, 40, 1), 10.0)
    assert arr_goal == pytest.approx([6.0, 8.0, 1.0])

    grid = fn_empty_map((0, 0, 0), (4, 4, 2), 0.1)
    fn_add_pillar(grid, (2.0, 2.0), 0.3)
    arr_goal = fn_local_goal((0.5, 2.05, 1.05), (2.05, 2.05, 1.05), 10.0, grid)
    assert not fn_is_occupied(grid, fn_world_to_cell(grid, arr_goal))
    assert np.linalg.norm(arr_goal - np.array([2.05, 2.05, 1.05])) < 0.5
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def test_pack_unpack_layout():
    list_trajs = [fn_rest_guess((0, 0, 1), (4, 0, 1), 3), fn_rest_guess((0, 2, 1), (4, 2, 1), 2)]
    arr_x = fn_pack_variables(list_trajs)
    assert arr_x.size == (3 * 2 + 3) + (3 * 1 + 2)
    assert arr_x[6:9] == pytest.approx(np.log(list_trajs[0].arr_T))

    list_back = fn_unpack_variables(arr_x, list_trajs)
    for traj_a, traj_b in zip(list_trajs, list_back):
        assert traj_b.arr_q == pytest.approx(traj_a.arr_q)
        assert traj_b.arr_T == pytest.approx(traj_a.arr_T)
        assert traj_b.arr_tail == pytest.approx(traj_a.arr_tail)

    with pytest.raises(ContractError):
        fn_unpack_variables(arr_x[:-1], list_trajs)


def test_joint_objective_terms_and_shape():
    list_trajs = [fn_rest_guess((0, 0, 1), (4, 0, 1), 2), fn_rest_guess((4, 0.1, 1), (0, 0.1, 1), 2)]
    arr_x = fn_pack_variables(list_trajs)
    flt_j, arr_grad, dict_terms, list_out = fn_joint_objective(arr_x, list_trajs, PenaltyWeights())
    assert arr_grad.shape == arr_x.shape
    assert set(dict_terms) == set(LIST_TERM_NAMES)
    assert dict_terms['reciprocal'] > 0.0
    assert dict_terms['obstacle'] == 0.0
    assert len(list_out) == 2
    assert flt_j > 0.0


def test_joint_objective_rejects_bad_iterate():
    list_trajs = [fn_rest_guess((0, 0, 1), (4, 0, 1), 1)]
    arr_x = fn_pack_variables(list_trajs)
    arr_x[-1] = 1000.0
    with pytest.raises(SolverError):
        fn_joint_objective(arr_x, list_trajs, PenaltyWeights())
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ````````````````````````````````````````````````````````````
def test_problem_contract():
    traj = fn_rest_guess((0, 0, 1), (4, 0, 1))
    with pytest.raises(ContractError):
        GroupPlanProblem([0, 1], [traj], PenaltyWeights())
    with pytest.raises(ContractError):
        GroupPlanProblem([], [], PenaltyWeights())

    grid = fn_empty_map((0, 0, 0), (3, 3, 2), 0.1)
    with pytest.raises(ContractError):
        GroupPlanProblem([0], [traj], PenaltyWeights(), grid=grid)


def test_single_agent_time_tradeoff():
    # effort and time only: 720 L^2 / T^5 + 20 T is minimal at T^6 = 180 L^2
    flt_length = 4.0
    weights = PenaltyWeights(arr_lambda=[1.0, 20.0, 0.0, 0.0, 0.0, 0.0])
    traj0 = fn_rest_guess((0, 0, 1), (flt_length, 0, 1))
    problem = GroupPlanProblem([0], [traj0], weights, int_max_iter=200, flt_tolerance=1e-5)

    list_trajs, df_trace = fn_optimize_group(problem)
    flt_t_opt = (180.0 * flt_length ** 2) ** (1.0 / 6.0)
    assert list_trajs[0].flt_duration == pytest.approx(flt_t_opt, rel=0.01)
    assert df_trace['J'].iloc[-1] <= df_trace['J'].iloc[0]
    assert list(df_trace.columns) == ['iteration', 'J'] + LIST_TERM_NAMES + ['grad_inf']


def test_trace_csv_written(tmp_path):
    str_csv = str(tmp_path / 'trace.csv')
    weights = PenaltyWeights(arr_lambda=[1.0, 20.0, 0.0, 0.0, 0.0, 0.0])
    problem = GroupPlanProblem([0], [fn_rest_guess((0, 0, 1), (2, 0, 1))], weights,
                               int_max_iter=20, str_trace_csv=str_csv)
    fn_optimize_group(problem)
    assert (tmp_path / 'trace.csv').exists()


def test_head_on_pair_is_separated():
    list_init = [fn_rest_guess((0, 0.05, 1), (6, 0.05, 1), 3),
                 fn_rest_guess((6, -0.05, 1), (0, -0.05, 1), 3)]
    weights = PenaltyWeights()
    assert not fn_post_check(list_init, None, weights).b_safe

    problem = GroupPlanProblem([0, 1], list_init, weights)
    result, dict_info = fn_solve_group_problem(problem)

    assert not isinstance(result, EmergencyStop)
    report = fn_post_check(result, None, weights)
    assert report.dict_pair_distance[(0, 1)] >= weights.flt_clearance_swarm - 1e-3
    assert dict_info['flt_solve_time'] > 0.0
    for traj, arr_goal in zip(result, [(6, 0.05, 1), (0, -0.05, 1)]):
        assert fn_evaluate(traj, traj.flt_duration) == pytest.approx(np.array(arr_goal, dtype=float))
# ````````````````````````````````````````````````````````````


# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,
def test_post_check_safe_pair():
    weights = PenaltyWeights()
    list_trajs = [fn_line((0, 0, 1), (4, 0, 1), 4.0), fn_line((0, 2, 1), (4, 2, 1), 4.0)]
    report = fn_post_check(list_trajs, None, weights, list_agent_ids=[7, 9])
    assert report.b_safe
    assert report.str_verdict == 'safe'
    assert report.dict_pair_distance[(7, 9)] == pytest.approx(2.0)
    assert report.dict_obstacle_distance[7] == np.inf
    assert report.dict_dynamic_margin[9]['velocity'] == pytest.approx(0.7)


def test_post_check_flags_each_kind():
    weights = PenaltyWeights()
    list_trajs = [fn_line((0, 0, 1), (4, 0, 1), 4.0), fn_line((2, -2, 1), (2, 2, 1), 4.0),
                  fn_line((0, 3, 1), (10, 3, 1), 1.0)]
    report = fn_post_check(list_trajs, None, weights)
    assert report.str_verdict == 'unsafe'
    list_kinds = [(v[0], v[1]) for v in report.list_violations]
    assert ('reciprocal', (0, 1)) in list_kinds
    assert ('velocity', (2,)) in list_kinds
    assert all(v[2] < 0.0 for v in report.list_violations)

    grid = fn_empty_map((0, 0, 0), (4, 4, 2), 0.1)
    fn_add_pillar(grid, (2.0, 2.0), 0.3)
    fn_build_distance_field(grid)
    report = fn_post_check([fn_line((0.5, 2.0, 1), (3.5, 2.0, 1), 4.0)], grid, weights)
    assert report.list_violations[0][0] == 'obstacle'


def test_post_check_grazing_tolerance():
    weights = PenaltyWeights()
    list_trajs = [fn_line((0, 0, 1), (4, 0, 1), 4.0), fn_line((0, 0.4995, 1), (4, 0.4995, 1), 4.0)]
    assert not fn_post_check(list_trajs, None, weights).b_safe
    assert fn_post_check(list_trajs, None, weights, flt_tolerance=1e-3).b_safe


def test_post_check_fixed_neighbour():
    weights = PenaltyWeights()
    traj_hover = MincoTrajectory(np.zeros((0, 3)), [10.0], fn_boundary_state((2, 0.1, 1)),
                                 fn_boundary_state((2, 0.1, 1)))
    report = fn_post_check([fn_line((0, 0, 1), (4, 0, 1), 4.0)], None, weights,
                           list_fixed=[(traj_hover, 0.0)])
    assert report.list_violations[0][:2] == ('reciprocal', (0, 'fixed_0'))
# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,


# ............................................................
def test_escalate_weights():
    weights = PenaltyWeights()
    report = SafetyReport({}, {}, {}, [('velocity', (0,), -0.1), ('jerk', (0,), -0.2),
                                       ('reciprocal', (0, 1), -0.05)])
    weights_up = fn_escalate_weights(weights, report, 10.0)
    arr_expect = weights.arr_lambda.copy()
    arr_expect[INT_FEASIBILITY] *= 10.0
    arr_expect[INT_RECIPROCAL] *= 10.0
    assert weights_up.arr_lambda == pytest.approx(arr_expect)
    assert weights.arr_lambda[INT_FEASIBILITY] == 1.0e4


def test_braking_trajectory():
    arr_state = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    traj = fn_braking_trajectory(arr_state, 6.2)
    assert traj.flt_duration == pytest.approx(0.5)
    assert fn_evaluate(traj, 0.0, 1) == pytest.approx([1.0, 0.0, 0.0])
    assert fn_evaluate(traj, 0.5, 1) == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)
    assert fn_evaluate(traj, 0.5) == pytest.approx([0.25, 0.0, 1.0])


def test_unsolvable_group_ends_in_emergency_stop():
    # both agents are sent to the same point
    list_init = [fn_rest_guess((0, 0, 1), (3, 1, 1)), fn_rest_guess((0, 2, 1), (3, 1, 1))]
    problem = GroupPlanProblem([4, 5], list_init, PenaltyWeights(), int_max_iter=30,
                               int_retry_limit=1)
    result, dict_info = fn_solve_group_problem(problem)

    assert isinstance(result, EmergencyStop)
    assert result.list_agent_ids == [4, 5]
    assert dict_info['int_retries'] == 1
    assert not dict_info['report'].b_safe
    assert ('reciprocal', (4, 5)) in [(v[0], v[1]) for v in dict_info['report'].list_violations]
# ............................................................
