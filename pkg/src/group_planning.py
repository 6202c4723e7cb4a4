# Group planning framework.  Agents closer than d_safe to every other
# member of a clique are grouped; the lowest id of each group becomes the
# core, which merges the member maps, runs the multi-agent path search on
# a coarse grid and the joint trajectory optimization.  Everyone else
# plans alone against the committed trajectories of their neighbours.
#
# Created by: Andy Carter, PE
# Created - 2024.04.22
# Last revised - 2024.06.10 - distance field of the planning map built on a
#                             copy
#
# swarm-group-plan - group planning


# ************************************************************
from dataclasses import dataclass, field
import copy
import json
import time

import numpy as np

from emapf_search import fn_plan_emapf
from grid_map_3d import (fn_build_distance_field, fn_cell_to_world, fn_coarsen_map,
                         fn_crop_map, fn_merge_maps, fn_nearest_free_cell, fn_world_to_cell)
from joint_optimization import (EmergencyStop, GroupPlanProblem, fn_init_from_path,
                                fn_solve_group_problem)
from minco_trajectory import MincoTrajectory, fn_boundary_state, fn_evaluate
from penalty_terms import fn_weights_from_config
from planner_errors import (ContractError, MapBoundsError, MapfInfeasibleError,
                            MapfTimeoutError, PlannerError)
# ************************************************************


# initial guess flies the trapezoid at this share of the speed limit
FLT_INIT_SPEED_RATIO = 0.8


# ------------------------------------------------------------
@dataclass
class GroupParams:
    int_n_min: int = 2
    int_n_max: int = 8
    flt_d_safe: float = 1.0

    def __post_init__(self):
        if self.int_n_min < 2 or self.int_n_max < self.int_n_min:
            raise ContractError('group sizes need 2 <= n_min <= n_max')
        if self.flt_d_safe < 0:
            raise ContractError('d_safe must be non-negative')


@dataclass
class Partition:
    list_groups: list = field(default_factory=list)
    list_isolated: list = field(default_factory=list)

    def fn_group_of(self, int_agent):
        for tpl_group in self.list_groups:
            if int_agent in tpl_group:
                return tpl_group
        return None


@dataclass
class PlanRequest:
    """
    What an agent shares with the planner: its start state (position,
    velocity, acceleration), its local goal and its known map.
    """

    int_agent_id: int
    arr_state: np.ndarray
    arr_local_goal: np.ndarray
    grid: object = None


@dataclass
class PlanDirective:
    str_mode: str
    list_agent_ids: list
    int_core: int
    result: object
    dict_info: dict = field(default_factory=dict)

    @property
    def b_emergency(self):
        return isinstance(self.result, EmergencyStop)
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_group_params_from_config(dict_group):
    return GroupParams(dict_group['int_n_min'], dict_group['int_n_max'], dict_group['flt_d_safe'])


def fn_group_check(dict_positions, params):

    """
    Partition agents into groups and isolated agents.

    Edges join agents within d_safe of each other.  Cliques are grown
    greedily from the lowest remaining id, adding higher ids adjacent to
    every member.  A clique of at least n_min agents becomes groups of at
    most n_max (a short remainder is isolated); otherwise its seed is
    isolated and the others stay available.

    Args:
        dict_positions: {agent id: 3-vector}
        params: GroupParams

    Returns:
        Partition
    """

    list_ids = sorted(dict_positions.keys())
    if len(set(list_ids)) != len(list_ids):
        raise ContractError('agent ids must be distinct')

    arr_pos = np.array([np.asarray(dict_positions[i], dtype=float) for i in list_ids]).reshape(-1, 3)
    arr_adj = np.linalg.norm(arr_pos[:, None, :] - arr_pos[None, :, :], axis=2) <= params.flt_d_safe

    list_remaining = list(range(len(list_ids)))
    partition = Partition()

    while list_remaining:
        int_seed = list_remaining[0]
        list_clique = [int_seed]
        for int_other in list_remaining[1:]:
            if all(arr_adj[int_other, m] for m in list_clique):
                list_clique.append(int_other)

        if len(list_clique) < params.int_n_min:
            partition.list_isolated.append(list_ids[int_seed])
            list_remaining.remove(int_seed)
            continue

        for int_start in range(0, len(list_clique), params.int_n_max):
            list_chunk = list_clique[int_start:int_start + params.int_n_max]
            if len(list_chunk) >= params.int_n_min:
                partition.list_groups.append(tuple(list_ids[m] for m in list_chunk))
            else:
                partition.list_isolated.extend(list_ids[m] for m in list_chunk)
        for m in list_clique:
            list_remaining.remove(m)

    partition.list_isolated.sort()
    fn_check_partition(partition, list_ids, params)
    return partition


def fn_check_partition(partition, list_ids, params):
    # disjoint cover with every group size in [n_min, n_max]
    list_members = [a for g in partition.list_groups for a in g] + list(partition.list_isolated)
    if sorted(list_members) != sorted(list_ids):
        raise ContractError('partition is not a disjoint cover of the agents')
    for tpl_group in partition.list_groups:
        if not params.int_n_min <= len(tpl_group) <= params.int_n_max:
            raise ContractError('group size out of range: ' + str(tpl_group))
    return True


def fn_select_core(group):
    if len(group) == 0:
        raise ContractError('a group needs at least one agent')
    return min(group)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ````````````````````````````````````````````````````````````
def fn_partition_events(partition, flt_time):
    return [{'flt_time': float(flt_time),
             'list_members': [int(a) for a in tpl_group],
             'int_core': int(fn_select_core(tpl_group))}
            for tpl_group in partition.list_groups]


def fn_write_partition_events(str_path, list_events):
    # appended as JSON lines
    with open(str_path, 'a') as f:
        for dict_event in list_events:
            f.write(json.dumps(dict_event) + '\n')
    return str_path
# ````````````````````````````````````````````````````````````


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_merge_member_maps(list_requests, b_map_sharing):
    # merged map of all members, or the core map alone; the members' own
    # maps are left untouched
    list_sorted = sorted(list_requests, key=lambda r: r.int_agent_id)
    grid = list_sorted[0].grid
    if b_map_sharing:
        for request in list_sorted[1:]:
            if request.grid is not None and request.grid is not grid:
                grid = fn_merge_maps(grid, request.grid)

    if grid is not None and grid.arr_distance_field is None:
        grid = copy.copy(grid)
        fn_build_distance_field(grid)
    return grid


def fn_mapf_points(list_requests, grid, dict_config, dict_stats):

    """
    Discrete paths (world points) for the members on a coarse planning
    grid cropped around their starts and local goals.  None when the
    search fails or the endpoints collapse onto shared coarse cells.
    """

    dict_mapf = dict_config['mapf']
    flt_clearance = dict_config['penalty']['flt_clearance_obstacle']

    arr_ends = np.array([r.arr_state[0] for r in list_requests] +
                        [r.arr_local_goal for r in list_requests])
    arr_lower = arr_ends.min(axis=0) - dict_mapf['flt_mapf_padding']
    arr_upper = arr_ends.max(axis=0) + dict_mapf['flt_mapf_padding']

    grid_crop = fn_crop_map(grid, arr_lower, arr_upper)
    grid_coarse = fn_coarsen_map(grid_crop, dict_mapf['flt_mapf_resolution'], flt_clearance)

    def fn_cell(arr_point):
        flt_eps = 1e-6 * grid_coarse.flt_resolution
        arr_p = np.clip(arr_point, grid_coarse.arr_origin + flt_eps, grid_coarse.arr_upper - flt_eps)
        return fn_nearest_free_cell(grid_coarse, fn_world_to_cell(grid_coarse, arr_p))

    try:
        list_starts = [fn_cell(r.arr_state[0]) for r in list_requests]
        list_goals = [fn_cell(r.arr_local_goal) for r in list_requests]
        list_paths = fn_plan_emapf(list_starts, list_goals, grid_coarse,
                                   flt_omega=dict_mapf['flt_omega'],
                                   flt_tie_weight=dict_mapf['flt_tie_weight'],
                                   int_node_budget=dict_mapf['int_node_budget'],
                                   flt_time_budget=dict_mapf['flt_time_budget'],
                                   int_n_max=max(len(list_requests), dict_config['group_plan']['int_n_max']),
                                   int_expansion_budget=dict_mapf['int_expansion_budget'],
                                   dict_stats=dict_stats)
    except (MapfTimeoutError, MapfInfeasibleError, MapBoundsError, ContractError) as e:
        dict_stats['str_failure'] = str(e)
        return None

    return [[fn_cell_to_world(grid_coarse, c) for c in path.list_cells] for path in list_paths]
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_plan_group(list_requests, dict_config, list_fixed=None, b_map_sharing=None,
                  str_trace_csv=None):

    """
    Whole group pipeline at the core agent: map merge, path search,
    initial trajectories, joint optimization, post-check and reweighting.

    Args:
        list_requests: PlanRequest per member
        dict_config: typed global configuration
        list_fixed: (trajectory, time offset) of non-members to avoid
        b_map_sharing: overrides [group_plan] b_map_sharing when given
        str_trace_csv: optional path of the solver trace CSV

    Returns:
        PlanDirective
    """

    if len(list_requests) < 1:
        raise ContractError('a plan needs at least one request')

    list_requests = sorted(list_requests, key=lambda r: r.int_agent_id)
    list_ids = [r.int_agent_id for r in list_requests]
    int_core = fn_select_core(list_ids)
    if b_map_sharing is None:
        b_map_sharing = dict_config['group_plan']['b_map_sharing']

    weights = fn_weights_from_config(dict_config['penalty'])
    dict_opt = dict_config['joint_opt']
    int_s = dict_config['minco']['int_s']

    flt_start = time.perf_counter()
    grid = fn_merge_member_maps(list_requests, b_map_sharing)

    dict_mapf_stats = {}
    list_points = None
    if grid is not None:
        list_points = fn_mapf_points(list_requests, grid, dict_config, dict_mapf_stats)
    str_init = 'mapf' if list_points is not None else 'straight'
    if list_points is None:
        list_points = [[r.arr_state[0], r.arr_local_goal] for r in list_requests]

    list_init = []
    for request, list_pts in zip(list_requests, list_points):
        arr_head = np.asarray(request.arr_state, dtype=float).reshape(int_s, 3)
        arr_tail = fn_boundary_state(request.arr_local_goal, int_s=int_s)
        arr_q, arr_T = fn_init_from_path(list_pts, arr_head, arr_tail,
                                         FLT_INIT_SPEED_RATIO * weights.flt_v_max, weights.flt_a_max,
                                         grid if str_init == 'mapf' else None,
                                         weights.flt_clearance_obstacle,
                                         dict_opt['int_min_pieces'], dict_opt['flt_min_duration'])
        list_init.append(MincoTrajectory(arr_q, arr_T, arr_head, arr_tail, int_s))

    problem = GroupPlanProblem(list_ids, list_init, weights, grid,
                               list_fixed=list(list_fixed or []),
                               int_max_iter=dict_opt['int_max_iter'],
                               flt_tolerance=dict_opt['flt_tolerance'],
                               int_retry_limit=dict_opt['int_retry_limit'],
                               flt_reweight_factor=dict_opt['flt_reweight_factor'],
                               flt_margin_clearance=dict_opt['flt_margin_clearance'],
                               flt_margin_dynamic=dict_opt['flt_margin_dynamic'],
                               flt_post_check_tolerance=dict_opt['flt_post_check_tolerance'],
                               str_trace_csv=str_trace_csv)
    result, dict_info = fn_solve_group_problem(problem)

    dict_info['str_init'] = str_init
    dict_info['dict_mapf_stats'] = dict_mapf_stats
    dict_info['flt_plan_time'] = time.perf_counter() - flt_start

    str_mode = 'group' if len(list_ids) > 1 else 'single'
    return PlanDirective(str_mode, list_ids, int_core, result, dict_info)


def fn_plan_single(request, dict_config, list_fixed=None, str_trace_csv=None):
    # K = 1 pipeline on the agent's own map
    return fn_plan_group([request], dict_config, list_fixed, False, str_trace_csv)
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ------------------------------------------------------------
def fn_fixed_neighbours(list_members, dict_requests, dict_committed, flt_now, flt_radius):

    """
    Committed trajectories of non-members within flt_radius of any member,
    as (trajectory, time offset) with the offset mapping the new plan's
    clock onto the neighbour's.
    """

    list_fixed = []
    arr_members = np.array([dict_requests[m].arr_state[0] for m in list_members])
    for int_other in sorted(dict_committed.keys()):
        if int_other in list_members:
            continue
        traj, flt_t_start = dict_committed[int_other]
        flt_offset = flt_now - flt_t_start
        arr_p = fn_evaluate(traj, flt_offset)
        if np.min(np.linalg.norm(arr_members - arr_p[None, :], axis=1)) <= flt_radius:
            list_fixed.append((traj, flt_offset))
    return list_fixed


def fn_dispatch(partition, dict_requests, dict_config, dict_committed=None, flt_now=0.0):

    """
    Plan every group at its core and every isolated agent on its own.
    A failed group solve becomes an emergency stop for that group only.

    Args:
        partition: Partition of the agents that need a plan
        dict_requests: {agent id: PlanRequest}
        dict_config: typed global configuration
        dict_committed: {agent id: (trajectory, start time)} of agents
            keeping their plans
        flt_now: current time (s)

    Returns:
        list of PlanDirective, groups first, then isolated agents by id
    """

    dict_committed = dict(dict_committed or {})
    flt_radius = dict_config['group_plan']['flt_neighbour_radius']

    list_jobs = [tuple(sorted(g)) for g in partition.list_groups] + \
                [(a,) for a in sorted(partition.list_isolated)]

    list_directives = []
    for tpl_members in list_jobs:
        list_requests = [dict_requests[m] for m in tpl_members]
        list_fixed = fn_fixed_neighbours(tpl_members, dict_requests, dict_committed,
                                         flt_now, flt_radius)
        try:
            if len(tpl_members) > 1:
                directive = fn_plan_group(list_requests, dict_config, list_fixed)
            else:
                directive = fn_plan_single(list_requests[0], dict_config, list_fixed)
        except PlannerError as e:
            str_mode = 'group' if len(tpl_members) > 1 else 'single'
            directive = PlanDirective(str_mode, list(tpl_members), fn_select_core(tpl_members),
                                      EmergencyStop(list(tpl_members), str(e)))

        # later jobs avoid the plans committed before them
        if not directive.b_emergency:
            for int_m, traj in zip(directive.list_agent_ids, directive.result):
                dict_committed[int_m] = (traj, flt_now)
        list_directives.append(directive)

    return list_directives
# ------------------------------------------------------------
