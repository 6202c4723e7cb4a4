# Deterministic kinematic simulation of a team of quadrotors flying their
# planned trajectories with perfect tracking.  Every cycle the replan
# triggers are evaluated, agents are partitioned into groups, plans are
# dispatched and the world advances by dt.  Metrics, per agent traces and
# partition events are written to an output folder.
#
# Created by: Andy Carter, PE
# Created - 2024.05.06
# Last revised - 2024.06.10 - plans issued under latency start at their
#                             start time
#
# swarm-group-plan - team simulation


# ************************************************************
import argparse
from dataclasses import dataclass, field
import copy
import json
import os
import time
import datetime

from multiprocessing import Pool
import numpy as np
import pandas as pd
import tqdm

from config_utils import fn_apply_overrides, fn_typed_config_from_ini, is_valid_file
from grid_map_3d import (GridMap3D, fn_build_distance_field, fn_distance_and_gradient,
                         fn_observe_map)
from group_planning import (Partition, fn_dispatch, fn_group_check, fn_group_params_from_config,
                            fn_partition_events, fn_write_partition_events, PlanRequest)
from joint_optimization import fn_braking_trajectory, fn_local_goal
from minco_trajectory import (MincoTrajectory, fn_beta, fn_boundary_state, fn_evaluate_many,
                              fn_locate_pieces)
from penalty_terms import fn_weights_from_config
from planner_errors import ContractError, PlannerError
from scenario_library import fn_build_map, fn_check_scenario, fn_read_scenario_json
# ************************************************************


# Gauss-Legendre nodes for the per step integrals
ARR_GL_NODES, ARR_GL_WEIGHTS = np.polynomial.legendre.leggauss(8)

# position samples per step for the safety minima
INT_SAFETY_SUBSTEPS = 5


# ------------------------------------------------------------
@dataclass
class AgentState:
    int_id: int
    list_goals: list
    arr_state: np.ndarray
    grid_known: object = None
    int_goal_idx: int = 0
    traj: MincoTrajectory = None
    flt_t_start: float = 0.0
    traj_pending: MincoTrajectory = None
    flt_t_pending: float = 0.0
    str_mode: str = 'single'
    tpl_group: tuple = None
    flt_next_refresh: float = 0.0
    b_goal_advanced: bool = False
    b_arrived: bool = False
    b_stopped: bool = False
    int_plans: int = 0
    flt_distance: float = 0.0
    flt_jerk_sq: float = 0.0
    flt_flight_time: float = None

    @property
    def arr_goal(self):
        return self.list_goals[self.int_goal_idx]

    @property
    def int_replans(self):
        return max(0, self.int_plans - 1)


@dataclass
class World:
    flt_time: float
    dict_agents: dict
    grid_truth: GridMap3D
    dict_config: dict
    str_knowledge: str = 'global'
    flt_min_pair_distance: float = np.inf
    flt_min_obstacle_distance: float = np.inf
    list_trace_rows: list = field(default_factory=list)


@dataclass
class Metrics:
    """
    Per agent flight time (s), flight distance (m), jerk squared integral
    (m^2/s^5) and replan count; group activations; minimum pairwise
    distance in the downwash metric and minimum obstacle distance (m);
    solver times (s).
    """

    dict_flight_time: dict
    dict_flight_distance: dict
    dict_jerk_sq: dict
    dict_replans: dict
    int_group_activations: int
    flt_min_pair_distance: float
    flt_min_obstacle_distance: float
    list_solve_times: list
    b_success: bool
    str_failure: str = ''
    flt_sim_time: float = 0.0
    dict_first_plan_clearance: dict = field(default_factory=dict)

    @property
    def flt_mean_flight_time(self):
        list_t = [v for v in self.dict_flight_time.values() if v is not None]
        return float(np.mean(list_t)) if list_t else np.nan

    @property
    def flt_mean_flight_distance(self):
        return float(np.mean(list(self.dict_flight_distance.values())))

    @property
    def flt_mean_jerk_sq(self):
        return float(np.mean(list(self.dict_jerk_sq.values())))

    @property
    def flt_mean_replans(self):
        return float(np.mean(list(self.dict_replans.values())))

    def fn_summary(self):
        return {'b_success': self.b_success,
                'str_failure': self.str_failure,
                'flt_sim_time': self.flt_sim_time,
                'flt_mean_flight_time': self.flt_mean_flight_time,
                'flt_mean_flight_distance': self.flt_mean_flight_distance,
                'flt_mean_jerk_sq': self.flt_mean_jerk_sq,
                'flt_mean_replans': self.flt_mean_replans,
                'int_group_activations': self.int_group_activations,
                'flt_min_pair_distance': self.flt_min_pair_distance,
                'flt_min_obstacle_distance': self.flt_min_obstacle_distance,
                'flt_mean_solve_time': float(np.mean(self.list_solve_times)) if self.list_solve_times else 0.0,
                'dict_flight_time': {str(k): v for k, v in self.dict_flight_time.items()},
                'dict_flight_distance': {str(k): v for k, v in self.dict_flight_distance.items()},
                'dict_jerk_sq': {str(k): v for k, v in self.dict_jerk_sq.items()},
                'dict_replans': {str(k): v for k, v in self.dict_replans.items()}}
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_hold_trajectory(arr_position):
    # rest at a point, used for agents without a plan
    return MincoTrajectory(np.zeros((0, 3)), [0.1], fn_boundary_state(arr_position),
                           fn_boundary_state(arr_position))


def fn_flying(agent):
    # trajectory flown now, before any pending plan starts
    if agent.traj is None:
        return fn_hold_trajectory(agent.arr_state[0]), 0.0
    return agent.traj, agent.flt_t_start


def fn_committed(agent):
    # latest plan of the agent: the pending one once it has been issued
    if agent.traj_pending is not None:
        return agent.traj_pending, agent.flt_t_pending
    return fn_flying(agent)


def fn_agent_position_at(agent, arr_t):
    arr_t = np.atleast_1d(np.asarray(arr_t, dtype=float))
    traj, flt_t_start = fn_flying(agent)
    arr_pos = fn_evaluate_many(traj, arr_t - flt_t_start, 0)
    if agent.traj_pending is not None:
        b_pending = arr_t >= agent.flt_t_pending
        if np.any(b_pending):
            arr_pos[b_pending] = fn_evaluate_many(agent.traj_pending,
                                                  arr_t[b_pending] - agent.flt_t_pending, 0)
    return arr_pos


def fn_state_at(traj, flt_t):
    return np.vstack([fn_evaluate_many(traj, [flt_t], d) for d in range(3)])
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_segment_integrals(traj, flt_t0, flt_t1):

    """
    Path length and jerk squared integral of a trajectory between two local
    times, split at piece boundaries and integrated by Gauss-Legendre.
    """

    flt_t0 = max(0.0, flt_t0)
    flt_t1 = min(traj.flt_duration, flt_t1)
    if flt_t1 <= flt_t0:
        return 0.0, 0.0

    arr_breaks = np.concatenate([[flt_t0], np.cumsum(traj.arr_T)[:-1], [flt_t1]])
    arr_breaks = np.unique(arr_breaks[(arr_breaks >= flt_t0) & (arr_breaks <= flt_t1)])

    flt_length = 0.0
    flt_jerk = 0.0
    for flt_a, flt_b in zip(arr_breaks[:-1], arr_breaks[1:]):
        flt_half = 0.5 * (flt_b - flt_a)
        arr_t = 0.5 * (flt_a + flt_b) + flt_half * ARR_GL_NODES
        arr_piece, _, _ = fn_locate_pieces(traj, np.full(1, 0.5 * (flt_a + flt_b)))
        arr_start = traj.arr_piece_start[arr_piece[0]]
        arr_local = np.clip(arr_t - arr_start, 0.0, traj.arr_T[arr_piece[0]])
        int_n = traj.int_n_coef
        arr_block = traj.fn_block(int(arr_piece[0]))

        arr_v = fn_beta(arr_local, 1, int_n) @ arr_block
        arr_j = fn_beta(arr_local, 3, int_n) @ arr_block
        flt_length += flt_half * float(np.sum(ARR_GL_WEIGHTS * np.linalg.norm(arr_v, axis=1)))
        flt_jerk += flt_half * float(np.sum(ARR_GL_WEIGHTS * np.sum(arr_j ** 2, axis=1)))

    return flt_length, flt_jerk


def fn_step_world(world, flt_dt):

    """
    Advance every agent by flt_dt along its trajectory, evaluated exactly
    from the trajectory start, and record arrival and safety minima.  A
    pending plan takes over at its start time, inside the step if need be;
    until then the agent keeps flying its current trajectory.
    """

    if flt_dt <= 0:
        raise ContractError('dt must be positive')

    dict_sim = world.dict_config['sim_harness']
    flt_t0 = world.flt_time
    flt_t1 = flt_t0 + flt_dt

    # sampled before any pending plan is swapped in
    fn_record_safety(world, flt_t0, flt_t1)

    for int_id in sorted(world.dict_agents):
        agent = world.dict_agents[int_id]

        list_segments = [(agent.traj, agent.flt_t_start, flt_t0, flt_t1)]
        if agent.traj_pending is not None and agent.flt_t_pending < flt_t1:
            flt_t_switch = max(agent.flt_t_pending, flt_t0)
            list_segments = [(agent.traj, agent.flt_t_start, flt_t0, flt_t_switch),
                             (agent.traj_pending, agent.flt_t_pending, flt_t_switch, flt_t1)]
            agent.traj, agent.flt_t_start = agent.traj_pending, agent.flt_t_pending
            agent.traj_pending = None

        if agent.traj is None:
            agent.arr_state = np.vstack([agent.arr_state[0], np.zeros(3), np.zeros(3)])
            continue

        for traj, flt_t_start, flt_a, flt_b in list_segments:
            if traj is None or agent.b_arrived:
                continue
            flt_length, flt_jerk = fn_segment_integrals(traj, flt_a - flt_t_start, flt_b - flt_t_start)
            agent.flt_distance += flt_length
            agent.flt_jerk_sq += flt_jerk
        agent.arr_state = fn_state_at(agent.traj, flt_t1 - agent.flt_t_start)

        if agent.b_arrived:
            continue
        flt_dist_goal = float(np.linalg.norm(agent.arr_state[0] - agent.arr_goal))
        flt_speed = float(np.linalg.norm(agent.arr_state[1]))
        if flt_dist_goal <= dict_sim['flt_arrival_radius'] and flt_speed <= dict_sim['flt_arrival_speed']:
            if agent.int_goal_idx == len(agent.list_goals) - 1:
                agent.b_arrived = True
                agent.flt_flight_time = flt_t1
            else:
                agent.int_goal_idx += 1
                agent.b_goal_advanced = True

    world.flt_time = flt_t1
    return world


def fn_record_safety(world, flt_t0, flt_t1):
    # minimum pairwise (downwash metric) and obstacle distances over the step
    arr_t = np.linspace(flt_t0, flt_t1, INT_SAFETY_SUBSTEPS + 1)[1:]
    list_ids = sorted(world.dict_agents)
    arr_pos = np.stack([fn_agent_position_at(world.dict_agents[i], arr_t) for i in list_ids])

    arr_e = np.diag(world.dict_config['penalty']['list_flt_downwash'])
    for i in range(len(list_ids)):
        for j in range(i + 1, len(list_ids)):
            arr_delta = arr_pos[i] - arr_pos[j]
            flt_d = float(np.sqrt(np.min(np.sum(arr_delta * (arr_delta @ arr_e), axis=1))))
            world.flt_min_pair_distance = min(world.flt_min_pair_distance, flt_d)

    if world.grid_truth.b_has_obstacles:
        arr_d, _, _ = fn_distance_and_gradient(world.grid_truth, arr_pos.reshape(-1, 3))
        world.flt_min_obstacle_distance = min(world.flt_min_obstacle_distance, float(np.min(arr_d)))
    else:
        world.flt_min_obstacle_distance = min(world.flt_min_obstacle_distance,
                                              world.grid_truth.flt_boundary_distance)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_init_world(scenario, dict_config, int_seed):

    """
    World at time zero: ground truth map, agent states at rest at their
    starts, known maps per the knowledge model and seeded refresh phases.
    """

    list_keep_out = [a.arr_start for a in scenario.list_agents] + \
                    [g for a in scenario.list_agents for g in a.list_goals]
    grid_truth = fn_build_map(scenario.dict_map, list_keep_out)
    fn_check_scenario(scenario, grid_truth, dict_config['penalty']['flt_clearance_obstacle'],
                      dict_config['penalty']['flt_clearance_swarm'])

    dict_sim = dict_config['sim_harness']
    rng = np.random.default_rng(int_seed)

    dict_agents = {}
    for spec in scenario.list_agents:
        if scenario.str_knowledge == 'global':
            grid_known = grid_truth
        elif spec.int_id in scenario.list_int_informed:
            grid_known = copy.deepcopy(grid_truth)
        else:
            grid_known = GridMap3D(grid_truth.arr_origin.copy(), grid_truth.tpl_dims,
                                   grid_truth.flt_resolution,
                                   flt_boundary_distance=grid_truth.flt_boundary_distance)
            fn_observe_map(grid_known, grid_truth, spec.arr_start, dict_sim['flt_sensing_radius'])

        flt_phase = float(rng.uniform(0.0, dict_sim['flt_refresh_period'])) \
            if dict_sim['flt_refresh_period'] > 0 else np.inf
        dict_agents[spec.int_id] = AgentState(spec.int_id, list(spec.list_goals),
                                              fn_boundary_state(spec.arr_start),
                                              grid_known=grid_known,
                                              flt_next_refresh=flt_phase)

    return World(0.0, dict_agents, grid_truth, dict_config, scenario.str_knowledge)


def fn_trajectory_invalid(agent, world, weights):

    """
    True when the committed trajectory, within the lookahead, comes closer
    than the obstacle clearance to the agent's known map or closer than the
    swarm clearance to another agent's committed trajectory.
    """

    if agent.traj is None:
        return True

    flt_lookahead = world.dict_config['sim_harness']['flt_lookahead']
    arr_t = world.flt_time + np.linspace(0.0, flt_lookahead, 31)
    arr_pos = fn_agent_position_at(agent, arr_t)

    grid = agent.grid_known
    if grid is not None and grid.b_has_obstacles:
        if grid.arr_distance_field is None:
            fn_build_distance_field(grid)
        arr_d, _, _ = fn_distance_and_gradient(grid, arr_pos)
        if np.min(arr_d) < weights.flt_clearance_obstacle:
            return True

    for int_other, other in world.dict_agents.items():
        if int_other == agent.int_id:
            continue
        arr_delta = arr_pos - fn_agent_position_at(other, arr_t)
        arr_d = np.sqrt(np.sum(arr_delta * (arr_delta @ weights.arr_downwash), axis=1))
        if np.min(arr_d) < weights.flt_clearance_swarm:
            return True

    return False


def fn_collect_triggers(world, weights):
    # agent id -> reason, for agents that must replan this cycle
    dict_triggers = {}
    for int_id in sorted(world.dict_agents):
        agent = world.dict_agents[int_id]
        if agent.b_arrived or agent.b_stopped:
            continue
        # a plan issued but not yet started is kept
        if agent.traj_pending is not None:
            continue
        if agent.traj is None:
            dict_triggers[int_id] = 'no_trajectory'
        elif agent.b_goal_advanced:
            dict_triggers[int_id] = 'goal_reached'
        elif world.flt_time >= agent.flt_next_refresh:
            dict_triggers[int_id] = 'periodic'
        elif world.flt_time - agent.flt_t_start >= agent.traj.flt_duration:
            dict_triggers[int_id] = 'plan_complete'
        elif fn_trajectory_invalid(agent, world, weights):
            dict_triggers[int_id] = 'invalidated'
    return dict_triggers


def fn_planning_partition(world, dict_triggers, params):

    """
    Partition of the agents planned this cycle.  Agents executing a group
    plan keep their group until it completes or a member triggers; the
    remaining active agents are grouped by the criteria, and a new group
    containing a triggered agent or an agent whose mode changes is planned
    as a whole.
    """

    set_need = set(dict_triggers)
    for int_id in list(set_need):
        tpl_group = world.dict_agents[int_id].tpl_group
        if tpl_group is not None:
            set_need.update(a for a in tpl_group if not world.dict_agents[a].b_stopped)

    list_free = []
    for int_id in sorted(world.dict_agents):
        agent = world.dict_agents[int_id]
        if agent.b_arrived or agent.b_stopped:
            continue
        if agent.tpl_group is not None and int_id not in set_need:
            continue
        list_free.append(int_id)

    if not list_free:
        return Partition(), {}

    partition = fn_group_check({i: world.dict_agents[i].arr_state[0] for i in list_free}, params)

    list_groups = []
    for tpl_group in partition.list_groups:
        b_changed = any(world.dict_agents[a].tpl_group != tpl_group for a in tpl_group)
        if b_changed or set_need.intersection(tpl_group):
            list_groups.append(tpl_group)
            for a in tpl_group:
                dict_triggers.setdefault(a, 'partition_change')

    list_isolated = []
    for a in partition.list_isolated:
        if a in set_need or world.dict_agents[a].tpl_group is not None:
            list_isolated.append(a)
            dict_triggers.setdefault(a, 'partition_change')

    return Partition(list_groups, list_isolated), dict_triggers


def fn_make_request(agent, world):
    dict_config = world.dict_config
    flt_latency = dict_config['group_plan']['flt_latency']
    # start state predicted at the time the new plan takes over
    if agent.traj is not None or agent.traj_pending is not None:
        traj, flt_t_start = fn_committed(agent)
        arr_state = fn_state_at(traj, world.flt_time + flt_latency - flt_t_start)
    else:
        arr_state = agent.arr_state.copy()

    grid = agent.grid_known
    if grid is not None and grid.arr_distance_field is None:
        fn_build_distance_field(grid)
    arr_local = fn_local_goal(arr_state[0], agent.arr_goal, dict_config['group_plan']['flt_horizon'], grid)
    return PlanRequest(agent.int_id, arr_state, arr_local, grid)


def fn_min_clearance(traj, grid):
    # obstacle distance of a trajectory against a map, sampled at 20 Hz
    arr_t = np.linspace(0.0, traj.flt_duration, max(2, int(traj.flt_duration * 20) + 1))
    arr_d, _, _ = fn_distance_and_gradient(grid, fn_evaluate_many(traj, arr_t, 0))
    return float(np.min(arr_d))
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ------------------------------------------------------------
def fn_run_scenario(scenario, dict_config, str_out_dir=None, int_seed=None, b_verbose=False):

    """
    Run the replan loop until every agent reaches its final goal, an
    emergency stop leaves an agent without a valid plan, or the timeout.

    Args:
        scenario: Scenario
        dict_config: typed global configuration (scenario overrides are
            applied here)
        str_out_dir: folder for traces, summary and events, or None
        int_seed: seed of the refresh phases; the scenario seed when None
        b_verbose: print a line per planning cycle

    Returns:
        Metrics
    """

    dict_config = fn_apply_overrides(dict_config, scenario.dict_overrides)
    if int_seed is None:
        int_seed = scenario.int_seed

    dict_sim = dict_config['sim_harness']
    weights = fn_weights_from_config(dict_config['penalty'])
    params = fn_group_params_from_config(dict_config['group_plan'])

    world = fn_init_world(scenario, dict_config, int_seed)
    flt_dt = dict_sim['flt_dt']
    flt_period = dict_sim['flt_refresh_period']

    list_events = []
    list_solve_times = []
    int_group_activations = 0
    dict_first_clearance = {}
    str_failure = ''
    b_success = False

    while True:
        if all(a.b_arrived for a in world.dict_agents.values()):
            b_success = True
            break
        if world.flt_time >= dict_sim['flt_timeout']:
            str_failure = 'timeout at ' + str(round(world.flt_time, 3)) + ' s'
            break

        # sensing
        if world.str_knowledge == 'sensed':
            for agent in world.dict_agents.values():
                fn_observe_map(agent.grid_known, world.grid_truth, agent.arr_state[0],
                               dict_sim['flt_sensing_radius'])

        dict_triggers = fn_collect_triggers(world, weights)
        partition, dict_triggers = fn_planning_partition(world, dict_triggers, params)

        if partition.list_groups or partition.list_isolated:
            list_planned = [a for g in partition.list_groups for a in g] + list(partition.list_isolated)
            dict_requests = {a: fn_make_request(world.dict_agents[a], world) for a in list_planned}
            dict_committed = {i: fn_committed(a) for i, a in world.dict_agents.items()
                              if i not in dict_requests}

            # new plans start once the latency has passed
            flt_t_plan = world.flt_time + dict_config['group_plan']['flt_latency']
            list_directives = fn_dispatch(partition, dict_requests, dict_config,
                                          dict_committed, flt_t_plan)
            for dict_event in fn_partition_events(partition, world.flt_time):
                list_events.append(dict_event)

            for directive in sorted(list_directives, key=lambda d: d.int_core):
                list_solve_times.append(directive.dict_info.get('flt_solve_time', 0.0))

                if directive.b_emergency:
                    for a in directive.list_agent_ids:
                        agent = world.dict_agents[a]
                        if agent.traj is not None and dict_triggers.get(a) in ('periodic', 'partition_change',
                                                                                'goal_reached', 'plan_complete'):
                            continue
                        agent.traj = fn_braking_trajectory(agent.arr_state, weights.flt_a_max)
                        agent.flt_t_start = world.flt_time
                        agent.traj_pending = None
                        agent.b_stopped = True
                        str_failure = 'emergency stop of agent ' + str(a) + ': ' + directive.result.str_reason
                    continue

                if directive.str_mode == 'group':
                    int_group_activations += 1
                tpl_group = tuple(directive.list_agent_ids) if directive.str_mode == 'group' else None
                for a, traj in zip(directive.list_agent_ids, directive.result):
                    agent = world.dict_agents[a]
                    agent.traj_pending = traj
                    agent.flt_t_pending = flt_t_plan
                    agent.str_mode = directive.str_mode
                    agent.tpl_group = tpl_group
                    agent.b_goal_advanced = False
                    agent.int_plans += 1
                    if flt_period > 0:
                        while agent.flt_next_refresh <= world.flt_time:
                            agent.flt_next_refresh += flt_period
                    if agent.int_plans == 1 and world.grid_truth.b_has_obstacles:
                        dict_first_clearance[a] = fn_min_clearance(traj, world.grid_truth)

                # members of a group refresh together on the core's phase
                if tpl_group is not None:
                    flt_next = world.dict_agents[directive.int_core].flt_next_refresh
                    for a in tpl_group:
                        world.dict_agents[a].flt_next_refresh = flt_next

            if b_verbose:
                print('  t=%.2f  planned %s  groups %s' % (world.flt_time, sorted(dict_requests),
                                                          partition.list_groups))

        if str_failure:
            break

        for agent in world.dict_agents.values():
            if agent.tpl_group is not None and agent.traj is not None and agent.traj_pending is None and \
                    world.flt_time - agent.flt_t_start >= agent.traj.flt_duration:
                agent.tpl_group = None
                agent.str_mode = 'single'

        fn_step_world(world, flt_dt)
        fn_trace_rows(world)

    metrics = Metrics({i: a.flt_flight_time for i, a in world.dict_agents.items()},
                      {i: a.flt_distance for i, a in world.dict_agents.items()},
                      {i: a.flt_jerk_sq for i, a in world.dict_agents.items()},
                      {i: a.int_replans for i, a in world.dict_agents.items()},
                      int_group_activations,
                      world.flt_min_pair_distance,
                      world.flt_min_obstacle_distance,
                      list_solve_times,
                      b_success,
                      str_failure,
                      world.flt_time,
                      dict_first_clearance)

    if str_out_dir:
        fn_write_run_outputs(world, metrics, list_events, str_out_dir)

    return metrics
# ------------------------------------------------------------


# ````````````````````````````````````````````````````````````
def fn_trace_rows(world):
    for int_id in sorted(world.dict_agents):
        agent = world.dict_agents[int_id]
        arr_p, arr_v = agent.arr_state[0], agent.arr_state[1]
        world.list_trace_rows.append([int_id, world.flt_time, arr_p[0], arr_p[1], arr_p[2],
                                      arr_v[0], arr_v[1], arr_v[2], agent.str_mode])


def fn_write_run_outputs(world, metrics, list_events, str_out_dir):
    # per agent trace CSV, JSON run summary and partition events
    os.makedirs(str_out_dir, exist_ok=True)

    df_trace = pd.DataFrame(world.list_trace_rows,
                            columns=['agent', 't', 'x', 'y', 'z', 'vx', 'vy', 'vz', 'mode'])
    for int_id, df_agent in df_trace.groupby('agent'):
        str_csv = os.path.join(str_out_dir, 'trace_agent_' + str(int_id) + '.csv')
        df_agent.drop(columns=['agent']).to_csv(str_csv, index=False)

    with open(os.path.join(str_out_dir, 'run_summary.json'), 'w') as f:
        json.dump(metrics.fn_summary(), f, indent=4, default=float)

    str_events = os.path.join(str_out_dir, 'partition_events.jsonl')
    if os.path.exists(str_events):
        os.remove(str_events)
    fn_write_partition_events(str_events, list_events)
# ````````````````````````````````````````````````````````````


# ............................................................
def fn_run_seed_job(tpl_job):
    scenario, dict_config, int_seed, str_out_dir = tpl_job
    try:
        metrics = fn_run_scenario(scenario, dict_config, str_out_dir, int_seed)
    except PlannerError as e:
        return {'int_seed': int_seed, 'b_success': False, 'str_failure': str(e)}
    dict_row = metrics.fn_summary()
    dict_row = {k: v for k, v in dict_row.items() if not k.startswith('dict_')}
    dict_row['int_seed'] = int_seed
    return dict_row


def fn_run_seeds(scenario, dict_config, list_seeds, str_out_dir=None, int_cores=1):

    """
    Run a scenario once per seed and tabulate the metrics.

    Returns:
        df_metrics: one row per seed
        dict_mean: mean of every numeric column
    """

    list_jobs = []
    for int_seed in list_seeds:
        str_seed_dir = os.path.join(str_out_dir, 'seed_' + str(int_seed)) if str_out_dir else None
        list_jobs.append((scenario, dict_config, int_seed, str_seed_dir))

    str_bar = "{desc}:({n_fmt}/{total_fmt})|{bar}| {percentage:.1f}%"
    if int_cores > 1:
        with Pool(processes=int_cores) as p:
            list_rows = list(tqdm.tqdm(p.imap(fn_run_seed_job, list_jobs),
                                       total=len(list_jobs), desc='   -- Seeds',
                                       bar_format=str_bar, ncols=65))
    else:
        list_rows = [fn_run_seed_job(j) for j in tqdm.tqdm(list_jobs, total=len(list_jobs),
                                                           desc='   -- Seeds',
                                                           bar_format=str_bar, ncols=65)]

    df_metrics = pd.DataFrame(list_rows)
    dict_mean = df_metrics.select_dtypes(include=[np.number, bool]).mean().to_dict()

    if str_out_dir:
        os.makedirs(str_out_dir, exist_ok=True)
        df_metrics.to_csv(os.path.join(str_out_dir, 'metrics_' + scenario.str_name + '.csv'), index=False)

    return df_metrics, dict_mean
# ............................................................


# ------------------------------------------------------------
def fn_simulate_team(str_scenario_json, str_out_dir, str_config_ini=None, int_seed=None,
                     int_seeds=1, int_cores=1):

    """
    Banner wrapper of a run from a scenario file.

    Returns:
        True when every run succeeded
    """

    print(" ")
    print("+=================================================================+")
    print("|                   SWARM GROUP PLAN - TEAM RUN                   |")
    print("+-----------------------------------------------------------------+")

    print("  ---(i) SCENARIO FILE: " + str(str_scenario_json))
    print("  ---(o) OUTPUT FOLDER: " + str(str_out_dir))
    print("  ---[c]   Optional: GLOBAL CONFIG: " + str(str_config_ini))
    print("  ---[s]   Optional: SEED: " + str(int_seed))
    print("  ---[n]   Optional: NUMBER OF SEEDS: " + str(int_seeds))
    print("===================================================================")

    try:
        dict_config = fn_typed_config_from_ini(str_config_ini)
        scenario = fn_read_scenario_json(str_scenario_json)
    except (PlannerError, FileNotFoundError) as e:
        print("  ERROR: " + str(e))
        return False

    if int_seed is None:
        int_seed = scenario.int_seed

    if int_seeds > 1:
        list_seeds = list(range(int_seed, int_seed + int_seeds))
        df_metrics, dict_mean = fn_run_seeds(scenario, dict_config, list_seeds, str_out_dir, int_cores)
        for str_key, flt_value in dict_mean.items():
            print("  " + str_key + ": " + str(round(float(flt_value), 4)))
        b_ok = bool(df_metrics['b_success'].all())
    else:
        try:
            metrics = fn_run_scenario(scenario, dict_config, str_out_dir, int_seed)
        except PlannerError as e:
            print("  ERROR: " + str(e))
            return False
        for str_key, value in metrics.fn_summary().items():
            if not str_key.startswith('dict_'):
                print("  " + str_key + ": " + str(value))
        b_ok = metrics.b_success

    if not b_ok:
        print("  ERROR: run failed")
    else:
        print("  COMPLETE: all agents reached their goals")
    return b_ok
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
if __name__ == '__main__':

    flt_start_run = time.time()

    parser = argparse.ArgumentParser(description='==================== SWARM TEAM SIMULATION ====================')

    parser.add_argument('-i',
                        dest="str_scenario_json",
                        help=r'REQUIRED: path to the scenario json Example: ../example_config/scenario_circle_exchange.json',
                        required=True,
                        metavar='FILE',
                        type=lambda x: is_valid_file(parser, x))

    parser.add_argument('-o',
                        dest="str_out_dir",
                        help=r'REQUIRED: output folder for traces and summary Example: ../runs/circle',
                        required=True,
                        metavar='DIR',
                        type=str)

    parser.add_argument('-c',
                        dest="str_config_ini",
                        help=r'OPTIONAL: global configuration ini: Default=built-in defaults',
                        required=False,
                        default=None,
                        metavar='FILE',
                        type=lambda x: is_valid_file(parser, x))

    parser.add_argument('-s',
                        dest="int_seed",
                        help='OPTIONAL: seed of the run: Default=scenario seed',
                        required=False,
                        default=None,
                        metavar='INTEGER',
                        type=int)

    parser.add_argument('-n',
                        dest="int_seeds",
                        help='OPTIONAL: number of consecutive seeds to run: Default=1',
                        required=False,
                        default=1,
                        metavar='INTEGER',
                        type=int)

    parser.add_argument('-p',
                        dest="int_cores",
                        help='OPTIONAL: processes for multi seed runs: Default=1',
                        required=False,
                        default=1,
                        metavar='INTEGER',
                        type=int)

    args = vars(parser.parse_args())

    b_ok = fn_simulate_team(args['str_scenario_json'], args['str_out_dir'], args['str_config_ini'],
                            args['int_seed'], args['int_seeds'], args['int_cores'])

    flt_end_run = time.time()
    flt_time_pass = (flt_end_run - flt_start_run) // 1
    time_pass = datetime.timedelta(seconds=flt_time_pass)

    print('Compute Time: ' + str(time_pass))
    raise SystemExit(0 if b_ok else 1)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
