# Joint trajectory optimization of a group of agents.  Discrete paths are
# pruned into initial waypoints and durations, the waypoints and virtual
# times (T = exp(tau)) of every agent are stacked into one vector and the
# weighted penalty sum is minimized with L-BFGS-B.  The result is checked
# against the nominal clearances and limits; violated terms are
# reweighted and re-solved, and an emergency stop is issued when the
# retries run out.
#
# Created by: Andy Carter, PE
# Created - 2024.04.09
# Last revised - 2024.05.27 - planning margins and nominal post-check
#
# swarm-group-plan - joint optimization


# ************************************************************
from dataclasses import dataclass, field, replace
import time
import warnings

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from grid_map_3d import (fn_cell_to_world, fn_distance_and_gradient, fn_is_inside,
                         fn_line_of_sight, fn_nearest_free_cell, fn_world_to_cell)
from minco_trajectory import (MincoTrajectory, fn_boundary_state, fn_evaluate_many,
                              fn_propagate_gradients, fn_virtual_time_chain)
from penalty_terms import (INT_FEASIBILITY, INT_OBSTACLE, INT_RECIPROCAL, LIST_TERM_NAMES,
                           fn_constraint_points, fn_control_effort, fn_feasibility_penalty,
                           fn_obstacle_penalty, fn_reciprocal_penalty, fn_time_cost,
                           fn_uniformity_penalty)
from planner_errors import ContractError, SolverError, TrajectoryDomainError
# ************************************************************


# lambda index escalated for each kind of post-check violation
DICT_VIOLATION_TERM = {'velocity': INT_FEASIBILITY,
                       'acceleration': INT_FEASIBILITY,
                       'jerk': INT_FEASIBILITY,
                       'obstacle': INT_OBSTACLE,
                       'reciprocal': INT_RECIPROCAL}

# bounds of the virtual time: piece durations within [0.01 s, 1000 s]
TPL_TAU_BOUNDS = (np.log(1.0e-2), np.log(1.0e3))


# ------------------------------------------------------------
@dataclass
class GroupPlanProblem:
    """
    One group solve.  Boundary states and local goals come from the head
    and tail of each initial trajectory; all agents start together.
    list_fixed holds (trajectory, time offset) of neighbours outside the
    group that are avoided but not optimized.
    """

    list_agent_ids: list
    list_init_trajs: list
    weights: object
    grid: object = None
    list_fixed: list = field(default_factory=list)
    int_max_iter: int = 500
    flt_tolerance: float = 1.0e-4
    int_retry_limit: int = 3
    flt_reweight_factor: float = 10.0
    flt_margin_clearance: float = 0.05
    flt_margin_dynamic: float = 0.05
    flt_post_check_tolerance: float = 0.0
    str_trace_csv: str = None

    def __post_init__(self):
        if len(self.list_agent_ids) != len(self.list_init_trajs):
            raise ContractError('one initial trajectory is needed per agent')
        if len(self.list_agent_ids) < 1:
            raise ContractError('a group problem needs at least one agent')
        if self.grid is not None:
            for int_id, traj in zip(self.list_agent_ids, self.list_init_trajs):
                if not fn_is_inside(self.grid, traj.arr_tail[0]):
                    raise ContractError('local goal of agent ' + str(int_id) + ' outside the map')


@dataclass
class SafetyReport:
    dict_obstacle_distance: dict
    dict_pair_distance: dict
    dict_dynamic_margin: dict
    list_violations: list

    @property
    def b_safe(self):
        return len(self.list_violations) == 0

    @property
    def str_verdict(self):
        return 'safe' if self.b_safe else 'unsafe'


@dataclass
class EmergencyStop:
    list_agent_ids: list
    str_reason: str
    report: SafetyReport = None
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_prune_path(list_points, grid, flt_clearance=0.0):

    """
    Greedy line-of-sight pruning: from each kept point jump to the farthest
    later point that is visible from it.
    """

    int_n = len(list_points)
    if int_n <= 2 or grid is None:
        return [np.asarray(p, dtype=float) for p in list_points]

    list_pruned = [np.asarray(list_points[0], dtype=float)]
    i = 0
    while i < int_n - 1:
        j = int_n - 1
        while j > i + 1 and not fn_line_of_sight(grid, list_points[i], list_points[j], flt_clearance):
            j -= 1
        list_pruned.append(np.asarray(list_points[j], dtype=float))
        i = j

    return list_pruned
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_trapezoid_time(flt_length, flt_v_max, flt_a_max):
    # rest-to-rest time over a distance with speed and acceleration caps
    if flt_length <= 0.0:
        return 0.0
    if flt_length >= flt_v_max ** 2 / flt_a_max:
        return flt_length / flt_v_max + flt_v_max / flt_a_max
    return 2.0 * np.sqrt(flt_length / flt_a_max)


def fn_init_from_path(list_points, arr_head, arr_tail, flt_target_speed, flt_a_max,
                      grid=None, flt_clearance=0.0, int_min_pieces=1, flt_min_duration=0.1):

    """
    Initial waypoints and durations from a discrete path.

    Args:
        list_points: world points of the path; the first and last are
            replaced by the boundary positions
        arr_head: (s,3) start state
        arr_tail: (s,3) end state
        flt_target_speed: cruise speed of the trapezoid profile (m/s)
        flt_a_max: acceleration of the trapezoid profile (m/s^2)
        grid: map used for line-of-sight pruning, or None for no pruning
        flt_clearance: clearance required by the pruning
        int_min_pieces: longest segments are halved until this many pieces
        flt_min_duration: shortest piece duration (s)

    Returns:
        arr_q: (M-1,3)
        arr_T: (M,)
    """

    list_pts = [np.asarray(p, dtype=float) for p in list_points]
    if len(list_pts) < 2:
        list_pts = list_pts + list_pts[-1:]
    list_pts[0] = np.asarray(arr_head[0], dtype=float)
    list_pts[-1] = np.asarray(arr_tail[0], dtype=float)

    list_pts = fn_prune_path(list_pts, grid, flt_clearance)

    # drop repeated points, keep both ends
    list_clean = [list_pts[0]]
    for arr_p in list_pts[1:-1]:
        if np.linalg.norm(arr_p - list_clean[-1]) > 1e-6:
            list_clean.append(arr_p)
    list_clean.append(list_pts[-1])
    if len(list_clean) > 2 and np.linalg.norm(list_clean[-1] - list_clean[-2]) <= 1e-6:
        del list_clean[-2]

    while len(list_clean) - 1 < int_min_pieces:
        arr_len = [np.linalg.norm(list_clean[i + 1] - list_clean[i]) for i in range(len(list_clean) - 1)]
        int_long = int(np.argmax(arr_len))
        list_clean.insert(int_long + 1, 0.5 * (list_clean[int_long] + list_clean[int_long + 1]))

    arr_seg = np.array([np.linalg.norm(list_clean[i + 1] - list_clean[i])
                        for i in range(len(list_clean) - 1)])
    flt_length = float(np.sum(arr_seg))
    flt_total = fn_trapezoid_time(flt_length, flt_target_speed, flt_a_max)

    if flt_length > 0.0:
        arr_T = np.maximum(flt_min_duration, flt_total * arr_seg / flt_length)
    else:
        arr_T = np.full(arr_seg.size, max(flt_min_duration, 0.5))

    arr_q = np.array(list_clean[1:-1]).reshape(-1, 3)
    return arr_q, arr_T


def fn_straight_initial_guess(arr_head, arr_tail, flt_target_speed, flt_a_max,
                              int_pieces=1, flt_min_duration=0.1):
    # fallback when no discrete path is available
    arr_q, arr_T = fn_init_from_path([arr_head[0], arr_tail[0]], arr_head, arr_tail,
                                     flt_target_speed, flt_a_max, None, 0.0,
                                     int_pieces, flt_min_duration)
    return MincoTrajectory(arr_q, arr_T, arr_head, arr_tail)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_local_goal(arr_position, arr_goal, flt_horizon, grid=None):

    """
    Global goal when within the horizon, else the point at the horizon on
    the straight line towards it; moved to the nearest free cell centre of
    grid when it lands on an occupied cell.
    """

    arr_position = np.asarray(arr_position, dtype=float)
    arr_goal = np.asarray(arr_goal, dtype=float)
    arr_vec = arr_goal - arr_position
    flt_dist = float(np.linalg.norm(arr_vec))

    if flt_dist <= flt_horizon:
        arr_local = arr_goal.copy()
    else:
        arr_local = arr_position + arr_vec / flt_dist * flt_horizon

    if grid is None:
        return arr_local

    flt_eps = 1e-6 * grid.flt_resolution
    arr_local = np.clip(arr_local, grid.arr_origin + flt_eps, grid.arr_upper - flt_eps)
    tpl_cell = fn_world_to_cell(grid, arr_local)
    tpl_free = fn_nearest_free_cell(grid, tpl_cell)
    if tpl_free != tpl_cell:
        arr_local = fn_cell_to_world(grid, tpl_free)

    return arr_local
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_pack_variables(list_trajs):
    # [q_1 flat, tau_1, q_2 flat, tau_2, ...]
    list_parts = []
    for traj in list_trajs:
        list_parts.append(traj.arr_q.ravel())
        list_parts.append(np.log(traj.arr_T))
    return np.concatenate(list_parts)


def fn_unpack_variables(arr_x, list_template):
    # trajectories of the stacked vector, boundaries taken from the template
    list_trajs = []
    int_off = 0
    for traj in list_template:
        int_m = traj.int_pieces
        int_nq = 3 * (int_m - 1)
        arr_q = arr_x[int_off:int_off + int_nq].reshape(int_m - 1, 3)
        arr_tau = arr_x[int_off + int_nq:int_off + int_nq + int_m]
        int_off += int_nq + int_m
        list_trajs.append(MincoTrajectory(arr_q, np.exp(arr_tau), traj.arr_head,
                                          traj.arr_tail, traj.int_s))

    if int_off != arr_x.size:
        raise ContractError('variable vector length does not match the group layout')
    return list_trajs


def fn_tau_bounds(list_template):
    list_bounds = []
    for traj in list_template:
        list_bounds += [(None, None)] * (3 * (traj.int_pieces - 1))
        list_bounds += [TPL_TAU_BOUNDS] * traj.int_pieces
    return list_bounds
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_joint_objective(arr_x, list_template, weights, grid=None, list_fixed=None):

    """
    Weighted penalty sum of the whole group and its gradient with respect
    to the stacked (q, tau) vector.

    Returns:
        flt_j: objective value
        arr_grad: gradient shaped like arr_x
        dict_terms: unweighted value of each term summed over agents
        list_trajs: trajectories at arr_x
    """

    try:
        # overflow of exp(tau) is reported as an invalid iterate
        with warnings.catch_warnings():
            warnings.simplefilter(action='ignore', category=RuntimeWarning)
            list_trajs = fn_unpack_variables(arr_x, list_template)
    except TrajectoryDomainError as e:
        raise SolverError('invalid iterate: ' + str(e))

    arr_lambda = weights.arr_lambda
    dict_terms = {str_name: 0.0 for str_name in LIST_TERM_NAMES}
    list_dc = [np.zeros_like(t.arr_c) for t in list_trajs]
    list_dT = [np.zeros(t.int_pieces) for t in list_trajs]

    def fn_add(int_term, int_agent, flt_value, arr_dc, arr_dT):
        dict_terms[LIST_TERM_NAMES[int_term]] += flt_value
        list_dc[int_agent] += arr_lambda[int_term] * arr_dc
        list_dT[int_agent] += arr_lambda[int_term] * arr_dT

    for u, traj in enumerate(list_trajs):
        cps = fn_constraint_points(traj, weights.int_kappa)

        if arr_lambda[0] > 0:
            fn_add(0, u, *fn_control_effort(traj))
        if arr_lambda[1] > 0:
            flt_jt, arr_dT = fn_time_cost(traj.arr_T)
            fn_add(1, u, flt_jt, 0.0, arr_dT)
        if arr_lambda[2] > 0:
            fn_add(2, u, *fn_feasibility_penalty(traj, weights, cps))
        if arr_lambda[3] > 0:
            fn_add(3, u, *fn_obstacle_penalty(traj, grid, weights, cps))
        if arr_lambda[5] > 0:
            fn_add(5, u, *fn_uniformity_penalty(traj, weights, cps))
        if arr_lambda[4] > 0:
            flt_jw, list_dc_w, list_dT_w = fn_reciprocal_penalty(list_trajs, u, weights,
                                                                 list_fixed, cps)
            dict_terms['reciprocal'] += flt_jw
            for k in range(len(list_trajs)):
                list_dc[k] += arr_lambda[4] * list_dc_w[k]
                list_dT[k] += arr_lambda[4] * list_dT_w[k]

    flt_j = float(sum(arr_lambda[i] * dict_terms[n] for i, n in enumerate(LIST_TERM_NAMES)))

    list_grad = []
    for u, traj in enumerate(list_trajs):
        arr_dq, arr_dT = fn_propagate_gradients(traj, list_dc[u], list_dT[u])
        arr_dtau = fn_virtual_time_chain(np.log(traj.arr_T), arr_dT)
        list_grad.append(arr_dq.ravel())
        list_grad.append(arr_dtau)
    arr_grad = np.concatenate(list_grad)

    if not np.isfinite(flt_j) or not np.all(np.isfinite(arr_grad)):
        raise SolverError('non-finite objective or gradient')

    return flt_j, arr_grad, dict_terms, list_trajs
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ````````````````````````````````````````````````````````````
def fn_planning_weights(weights, flt_margin_clearance, flt_margin_dynamic):
    # clearances widened and limits tightened for the solve
    return replace(weights,
                   arr_lambda=weights.arr_lambda.copy(),
                   flt_clearance_obstacle=weights.flt_clearance_obstacle + flt_margin_clearance,
                   flt_clearance_swarm=weights.flt_clearance_swarm + flt_margin_clearance,
                   flt_v_max=weights.flt_v_max * (1.0 - flt_margin_dynamic),
                   flt_a_max=weights.flt_a_max * (1.0 - flt_margin_dynamic),
                   flt_j_max=weights.flt_j_max * (1.0 - flt_margin_dynamic))
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_optimize_group(problem):

    """
    Minimize the joint objective of a group.

    Stops when the gradient infinity norm falls to
    flt_tolerance * max(1, |J|) or after int_max_iter iterations.

    Args:
        problem: GroupPlanProblem

    Returns:
        list_trajs: optimized MincoTrajectory per agent
        df_trace: per-iteration trace (iteration, J, terms, grad_inf)
    """

    weights_plan = fn_planning_weights(problem.weights, problem.flt_margin_clearance,
                                       problem.flt_margin_dynamic)
    list_template = problem.list_init_trajs
    arr_x0 = fn_pack_variables(list_template)

    dict_cache = {}
    list_rows = []
    dict_state = {'b_converged': False, 'arr_x_last': arr_x0.copy()}

    def fn_evaluate_x(arr_x):
        if dict_cache.get('arr_x') is not None and np.array_equal(dict_cache['arr_x'], arr_x):
            return dict_cache['result']
        tpl_result = fn_joint_objective(arr_x, list_template, weights_plan,
                                         problem.grid, problem.list_fixed)
        dict_cache['arr_x'] = arr_x.copy()
        dict_cache['result'] = tpl_result
        return tpl_result

    def fn_record(arr_x):
        flt_j, arr_grad, dict_terms, _ = fn_evaluate_x(arr_x)
        flt_grad_inf = float(np.max(np.abs(arr_grad))) if arr_grad.size else 0.0
        list_rows.append([len(list_rows), flt_j] + [dict_terms[n] for n in LIST_TERM_NAMES] +
                         [flt_grad_inf])
        dict_state['arr_x_last'] = arr_x.copy()
        return flt_grad_inf <= problem.flt_tolerance * max(1.0, abs(flt_j))

    def fn_fun(arr_x):
        flt_j, arr_grad, _, _ = fn_evaluate_x(arr_x)
        return flt_j, arr_grad

    def fn_callback(intermediate_result):
        if fn_record(np.asarray(intermediate_result.x)):
            dict_state['b_converged'] = True
            raise StopIteration

    def fn_trace_df():
        df = pd.DataFrame(list_rows, columns=['iteration', 'J'] + LIST_TERM_NAMES + ['grad_inf'])
        if problem.str_trace_csv:
            df.to_csv(problem.str_trace_csv, index=False)
        return df

    def fn_last_trajs():
        return fn_unpack_variables(dict_state['arr_x_last'], list_template)

    try:
        b_done = fn_record(arr_x0)
        if b_done:
            return fn_unpack_variables(arr_x0, list_template), fn_trace_df()

        res = minimize(fn_fun, arr_x0, jac=True, method='L-BFGS-B',
                       bounds=fn_tau_bounds(list_template),
                       callback=fn_callback,
                       options={'maxiter': problem.int_max_iter,
                                'ftol': 1.0e-15,
                                'gtol': 1.0e-12,
                                'maxls': 40})
    except SolverError as e:
        raise SolverError(str(e), fn_last_trajs(), fn_trace_df())

    int_iterations = len(list_rows) - 1
    b_capped = int_iterations >= problem.int_max_iter or getattr(res, 'nit', 0) >= problem.int_max_iter

    if not (dict_state['b_converged'] or b_capped or res.success):
        raise SolverError('solver stopped: ' + str(res.message), fn_last_trajs(), fn_trace_df())

    arr_x_final = dict_state['arr_x_last'] if dict_state['b_converged'] else np.asarray(res.x)
    return fn_unpack_variables(arr_x_final, list_template), fn_trace_df()
# ````````````````````````````````````````````````````````````


# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,
def fn_positions_at(traj, arr_t):
    # positions at global times, held at the ends
    return fn_evaluate_many(traj, arr_t, 0)


def fn_post_check(list_trajs, grid, weights, list_agent_ids=None, list_fixed=None,
                  int_density=4, flt_tolerance=0.0):

    """
    Sample the trajectories int_density times finer than the constraint
    points and measure obstacle clearance, pairwise distance in the
    downwash metric and the dynamic limit margins.

    Returns:
        SafetyReport; a violation is (kind, agent ids, margin)
    """

    if list_agent_ids is None:
        list_agent_ids = list(range(len(list_trajs)))

    int_steps = weights.int_kappa * int_density
    list_violations = []
    dict_obstacle = {}
    dict_dynamic = {}

    for int_id, traj in zip(list_agent_ids, list_trajs):
        arr_t = np.concatenate([traj.arr_piece_start[i] + np.linspace(0.0, traj.arr_T[i], int_steps + 1)
                                for i in range(traj.int_pieces)])

        if grid is not None and grid.b_has_obstacles:
            arr_d, _, _ = fn_distance_and_gradient(grid, fn_positions_at(traj, arr_t))
            flt_d_min = float(np.min(arr_d))
        else:
            flt_d_min = grid.flt_boundary_distance if grid is not None else np.inf
        dict_obstacle[int_id] = flt_d_min
        flt_margin = flt_d_min - weights.flt_clearance_obstacle
        if flt_margin < -flt_tolerance:
            list_violations.append(('obstacle', (int_id,), flt_margin))

        dict_margin = {}
        for str_kind, int_order, flt_limit in (('velocity', 1, weights.flt_v_max),
                                               ('acceleration', 2, weights.flt_a_max),
                                               ('jerk', 3, weights.flt_j_max)):
            arr_d = fn_evaluate_many(traj, arr_t, int_order)
            dict_margin[str_kind] = flt_limit - float(np.max(np.linalg.norm(arr_d, axis=1)))
            if dict_margin[str_kind] < -flt_tolerance:
                list_violations.append((str_kind, (int_id,), dict_margin[str_kind]))
        dict_dynamic[int_id] = dict_margin

    # common time grid for the pairwise distances
    flt_horizon = max(t.flt_duration for t in list_trajs)
    flt_step = min(float(np.min(t.arr_T)) for t in list_trajs) / int_steps
    int_n = int(np.ceil(flt_horizon / flt_step)) + 1
    arr_t = np.linspace(0.0, flt_horizon, int_n)
    list_pos = [fn_positions_at(t, arr_t) for t in list_trajs]

    arr_e = weights.arr_downwash
    dict_pair = {}

    def fn_metric_min(arr_a, arr_b):
        arr_delta = arr_a - arr_b
        return float(np.sqrt(np.min(np.sum(arr_delta * (arr_delta @ arr_e), axis=1))))

    for i in range(len(list_trajs)):
        for j in range(i + 1, len(list_trajs)):
            tpl_key = (list_agent_ids[i], list_agent_ids[j])
            dict_pair[tpl_key] = fn_metric_min(list_pos[i], list_pos[j])
        for int_f, (traj_f, flt_offset) in enumerate(list_fixed or []):
            tpl_key = (list_agent_ids[i], 'fixed_' + str(int_f))
            arr_pf = fn_positions_at(traj_f, arr_t[:len(list_pos[i])] + flt_offset)
            dict_pair[tpl_key] = fn_metric_min(list_pos[i], arr_pf)

    for tpl_key, flt_d in dict_pair.items():
        flt_margin = flt_d - weights.flt_clearance_swarm
        if flt_margin < -flt_tolerance:
            list_violations.append(('reciprocal', tpl_key, flt_margin))

    return SafetyReport(dict_obstacle, dict_pair, dict_dynamic, list_violations)
# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,


# ............................................................
def fn_escalate_weights(weights, report, flt_factor):
    # multiply lambda of every violated term once, others unchanged
    arr_lambda = weights.arr_lambda.copy()
    set_terms = {DICT_VIOLATION_TERM[v[0]] for v in report.list_violations}
    for int_term in set_terms:
        arr_lambda[int_term] *= flt_factor
    return replace(weights, arr_lambda=arr_lambda)


def fn_braking_trajectory(arr_state, flt_a_max):
    # single piece to rest along the current velocity
    arr_state = np.asarray(arr_state, dtype=float)
    flt_speed = float(np.linalg.norm(arr_state[1]))
    flt_T = max(0.5, 2.0 * flt_speed / flt_a_max)
    arr_stop = arr_state[0] + 0.5 * flt_T * arr_state[1]
    return MincoTrajectory(np.zeros((0, 3)), [flt_T], arr_state, fn_boundary_state(arr_stop))


def fn_reweight_and_retry(problem, report, list_trajs_last=None):

    """
    Re-solve with the weight of each violated term multiplied by
    flt_reweight_factor, warm started from the last result, until the
    nominal post-check passes or the retry limit is reached.

    Returns:
        (list of MincoTrajectory or EmergencyStop, retries used)
    """

    weights = problem.weights
    list_start = list_trajs_last if list_trajs_last is not None else problem.list_init_trajs

    for int_retry in range(1, problem.int_retry_limit + 1):
        weights = fn_escalate_weights(weights, report, problem.flt_reweight_factor)
        problem_retry = replace(problem, weights=weights, list_init_trajs=list_start)

        try:
            list_trajs, _ = fn_optimize_group(problem_retry)
        except SolverError as e:
            list_trajs = e.list_traj_last
            if list_trajs is None:
                continue

        report = fn_post_check(list_trajs, problem.grid, problem.weights, problem.list_agent_ids,
                               problem.list_fixed, flt_tolerance=problem.flt_post_check_tolerance)
        if report.b_safe:
            return list_trajs, int_retry
        list_start = list_trajs

    return EmergencyStop(list(problem.list_agent_ids),
                         'post-check still unsafe after ' + str(problem.int_retry_limit) + ' retries',
                         report), problem.int_retry_limit
# ............................................................


# ------------------------------------------------------------
def fn_solve_group_problem(problem):

    """
    Optimize, post-check against the nominal weights and reweight when
    unsafe.

    Returns:
        result: list of MincoTrajectory or EmergencyStop
        dict_info: solve time (s), retries, trace DataFrame, last report
    """

    flt_start = time.perf_counter()
    df_trace = None

    try:
        list_trajs, df_trace = fn_optimize_group(problem)
    except SolverError as e:
        list_trajs = e.list_traj_last
        df_trace = e.df_trace
        if list_trajs is None:
            list_trajs = problem.list_init_trajs

    report = fn_post_check(list_trajs, problem.grid, problem.weights, problem.list_agent_ids,
                           problem.list_fixed, flt_tolerance=problem.flt_post_check_tolerance)
    int_retries = 0
    result = list_trajs
    if not report.b_safe:
        result, int_retries = fn_reweight_and_retry(problem, report, list_trajs)
        if isinstance(result, EmergencyStop):
            report = result.report
        else:
            report = fn_post_check(result, problem.grid, problem.weights, problem.list_agent_ids,
                                   problem.list_fixed, flt_tolerance=problem.flt_post_check_tolerance)

    dict_info = {'flt_solve_time': time.perf_counter() - flt_start,
                 'int_retries': int_retries,
                 'df_trace': df_trace,
                 'report': report}
    return result, dict_info
# ------------------------------------------------------------
