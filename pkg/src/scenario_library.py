# Scenario definitions for the team simulator: the map to build, the
# agents with their start and goal sequence, the knowledge model and any
# overrides of the global configuration.  Scenarios come from the named
# builders below or from a scenario JSON file.
#
# Created by: Andy Carter, PE
# Created - 2024.05.02
# Last revised - 2024.05.29 - map sharing scenario
#
# swarm-group-plan - scenario library


# ************************************************************
from dataclasses import dataclass, field
import json

import numpy as np

from grid_map_3d import (fn_add_pillar, fn_build_distance_field, fn_distance_and_gradient,
                         fn_empty_map, fn_is_inside, fn_random_forest_map,
                         fn_wall_with_gate_map)
from planner_errors import ContractError, MapConfigError
# ************************************************************


LIST_KNOWLEDGE_MODELS = ['global', 'sensed']


# ------------------------------------------------------------
@dataclass
class AgentSpec:
    int_id: int
    arr_start: np.ndarray
    list_goals: list

    def __post_init__(self):
        self.arr_start = np.asarray(self.arr_start, dtype=float).reshape(3)
        self.list_goals = [np.asarray(g, dtype=float).reshape(3) for g in self.list_goals]
        if len(self.list_goals) < 1:
            raise ContractError('agent ' + str(self.int_id) + ' needs at least one goal')


@dataclass
class Scenario:
    """
    dict_map holds str_kind (empty, random_forest, wall_with_gate) and the
    keyword arguments of its builder, plus an optional list_pillars of
    [x, y, radius] added on top.  With the sensed knowledge model every
    agent starts with an empty map except those in list_int_informed,
    which start with the full map.
    """

    str_name: str
    dict_map: dict
    list_agents: list
    int_seed: int = 0
    str_knowledge: str = 'global'
    list_int_informed: list = field(default_factory=list)
    dict_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.str_knowledge not in LIST_KNOWLEDGE_MODELS:
            raise ContractError('unknown knowledge model: ' + str(self.str_knowledge))
        list_ids = [a.int_id for a in self.list_agents]
        if len(set(list_ids)) != len(list_ids):
            raise ContractError('agent ids must be distinct')
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_build_map(dict_map, list_keep_out=None):

    """
    Ground truth map of a scenario.

    Args:
        dict_map: map specification
        list_keep_out: points kept free of random pillars

    Returns:
        GridMap3D with its distance field built
    """

    dict_args = {k: v for k, v in dict_map.items() if k not in ('str_kind', 'list_pillars')}
    str_kind = dict_map.get('str_kind', 'empty')

    if str_kind == 'empty':
        grid = fn_empty_map(dict_args['arr_lower'], dict_args['arr_upper'],
                            dict_args.get('flt_resolution', 0.1),
                            dict_args.get('flt_boundary_distance', 10.0))
    elif str_kind == 'random_forest':
        grid = fn_random_forest_map(list_keep_out=list_keep_out, **dict_args)
    elif str_kind == 'wall_with_gate':
        grid = fn_wall_with_gate_map(**dict_args)
    else:
        raise MapConfigError('unknown map kind: ' + str(str_kind))

    for list_pillar in dict_map.get('list_pillars', []):
        fn_add_pillar(grid, list_pillar[:2], list_pillar[2])

    return fn_build_distance_field(grid)


def fn_check_scenario(scenario, grid, flt_clearance_obstacle, flt_clearance_swarm):
    # starts and goals inside the map, clear of obstacles, starts apart
    arr_starts = np.array([a.arr_start for a in scenario.list_agents])

    for agent in scenario.list_agents:
        for arr_p in [agent.arr_start] + agent.list_goals:
            if not fn_is_inside(grid, arr_p):
                raise ContractError('agent ' + str(agent.int_id) + ' endpoint outside the map: ' + str(arr_p))
            flt_d, _, _ = fn_distance_and_gradient(grid, arr_p)
            if flt_d < flt_clearance_obstacle:
                raise ContractError('agent ' + str(agent.int_id) + ' endpoint too close to an obstacle')

    if len(arr_starts) > 1:
        arr_d = np.linalg.norm(arr_starts[:, None, :] - arr_starts[None, :, :], axis=2)
        np.fill_diagonal(arr_d, np.inf)
        if np.min(arr_d) < flt_clearance_swarm:
            raise ContractError('agent starts closer than the swarm clearance')
    return True
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_single_straight(flt_length=10.0, int_seed=0):
    # one agent flying a straight line in empty space
    dict_map = {'str_kind': 'empty', 'arr_lower': [-2.0, -3.0, 0.0],
                'arr_upper': [flt_length + 2.0, 3.0, 3.0], 'flt_resolution': 0.2}
    list_agents = [AgentSpec(0, [0.0, 0.0, 1.0], [[flt_length, 0.0, 1.0]])]
    return Scenario('single_straight', dict_map, list_agents, int_seed)


def fn_circle_exchange(int_agents=8, flt_radius=15.0, flt_height=1.0, int_seed=0):
    # agents on a circle swap with the antipodal agent through the centre
    flt_edge = flt_radius + 3.0
    dict_map = {'str_kind': 'empty', 'arr_lower': [-flt_edge, -flt_edge, 0.0],
                'arr_upper': [flt_edge, flt_edge, 3.0], 'flt_resolution': 0.2}

    list_agents = []
    for i in range(int_agents):
        flt_angle = 2.0 * np.pi * i / int_agents
        arr_start = [flt_radius * np.cos(flt_angle), flt_radius * np.sin(flt_angle), flt_height]
        arr_goal = [-arr_start[0], -arr_start[1], flt_height]
        list_agents.append(AgentSpec(i, arr_start, [arr_goal]))

    dict_overrides = {'group_plan': {'flt_d_safe': 4.0}}
    return Scenario('circle_exchange', dict_map, list_agents, int_seed,
                    dict_overrides=dict_overrides)


def fn_narrow_gate(int_seed=0):
    # three agents each side of a wall with a 0.8 x 1.5 m gate, diagonal goals
    dict_map = {'str_kind': 'wall_with_gate', 'arr_lower': [-6.0, -4.0, 0.0],
                'arr_upper': [6.0, 4.0, 3.0], 'flt_resolution': 0.1,
                'flt_gate_width': 0.8, 'flt_gate_height': 1.5, 'flt_gate_bottom': 0.5}

    list_agents = []
    int_id = 0
    for flt_x in (-4.0, 4.0):
        for flt_y in (-2.0, 0.0, 2.0):
            list_agents.append(AgentSpec(int_id, [flt_x, flt_y, 1.25], [[-flt_x, -flt_y, 1.25]]))
            int_id += 1

    dict_overrides = {'mapf': {'flt_mapf_resolution': 0.2, 'flt_time_budget': 1.0},
                      'group_plan': {'flt_d_safe': 2.5},
                      'joint_opt': {'int_min_pieces': 3}}
    return Scenario('narrow_gate', dict_map, list_agents, int_seed,
                    dict_overrides=dict_overrides)


def fn_cross_flight(flt_side=8.0, flt_height=1.0, int_seed=0):
    # four corners of a square cross to the opposite corner through the centre
    flt_half = 0.5 * flt_side
    dict_map = {'str_kind': 'empty', 'arr_lower': [-flt_half - 3.0, -flt_half - 3.0, 0.0],
                'arr_upper': [flt_half + 3.0, flt_half + 3.0, 3.0], 'flt_resolution': 0.2}

    list_corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    list_agents = [AgentSpec(i, [sx * flt_half, sy * flt_half, flt_height],
                             [[-sx * flt_half, -sy * flt_half, flt_height]])
                   for i, (sx, sy) in enumerate(list_corners)]

    dict_overrides = {'group_plan': {'flt_d_safe': 3.0}}
    return Scenario('cross_flight', dict_map, list_agents, int_seed,
                    dict_overrides=dict_overrides)


def fn_air_traffic(int_agents=25, flt_size=50.0, int_goals=3, flt_spacing=5.0,
                   flt_pillar_radius=0.3, int_seed=0):

    """
    Agents on a lattice inside a random forest, each visiting a sequence of
    random goals.  Goals of the same leg are kept apart from each other and
    from the starts.
    """

    rng = np.random.default_rng(int_seed)
    flt_margin = 3.0
    int_side = int(np.ceil(np.sqrt(int_agents)))
    flt_pitch = (flt_size - 2.0 * flt_margin) / max(int_side - 1, 1)

    list_starts = []
    for i in range(int_agents):
        list_starts.append(np.array([flt_margin + (i % int_side) * flt_pitch,
                                     flt_margin + (i // int_side) * flt_pitch, 1.5]))

    list_goal_legs = []
    for _ in range(int_goals):
        list_leg = []
        while len(list_leg) < int_agents:
            arr_p = np.array([rng.uniform(flt_margin, flt_size - flt_margin),
                              rng.uniform(flt_margin, flt_size - flt_margin),
                              rng.uniform(1.0, 2.0)])
            list_taken = list_leg + list_starts
            if all(np.linalg.norm(arr_p - q) >= 2.0 for q in list_taken):
                list_leg.append(arr_p)
        list_goal_legs.append(list_leg)

    list_agents = [AgentSpec(i, list_starts[i], [leg[i] for leg in list_goal_legs])
                   for i in range(int_agents)]

    dict_map = {'str_kind': 'random_forest', 'int_seed': int_seed,
                'flt_avg_spacing': flt_spacing, 'flt_pillar_radius': flt_pillar_radius,
                'arr_lower': [0.0, 0.0, 0.0], 'arr_upper': [flt_size, flt_size, 3.0],
                'flt_resolution': 0.2, 'flt_keep_out_radius': 1.0}

    dict_overrides = {'group_plan': {'flt_d_safe': 2.0}}
    return Scenario('air_traffic', dict_map, list_agents, int_seed,
                    dict_overrides=dict_overrides)


def fn_map_sharing(b_map_sharing=True, int_seed=0):

    """
    Agent 0 flies along y = 0 through a pillar it cannot see yet; agent 1
    flies alongside at y = 1.5 and already knows the pillar.
    """

    dict_map = {'str_kind': 'empty', 'arr_lower': [-2.0, -4.0, 0.0],
                'arr_upper': [14.0, 4.0, 3.0], 'flt_resolution': 0.1,
                'list_pillars': [[6.0, 0.0, 0.4]]}

    list_agents = [AgentSpec(0, [0.0, 0.0, 1.0], [[12.0, 0.0, 1.0]]),
                   AgentSpec(1, [0.0, 1.5, 1.0], [[12.0, 1.5, 1.0]])]

    dict_overrides = {'group_plan': {'flt_d_safe': 3.0, 'b_map_sharing': b_map_sharing,
                                     'flt_horizon': 15.0}}
    return Scenario('map_sharing', dict_map, list_agents, int_seed, str_knowledge='sensed',
                    list_int_informed=[1], dict_overrides=dict_overrides)


DICT_BUILDERS = {'single_straight': fn_single_straight,
                 'circle_exchange': fn_circle_exchange,
                 'narrow_gate': fn_narrow_gate,
                 'cross_flight': fn_cross_flight,
                 'air_traffic': fn_air_traffic,
                 'map_sharing': fn_map_sharing}
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ............................................................
def fn_scenario_from_dict(dict_scenario):

    """
    Scenario from its JSON form: either {"str_builder": name, "dict_args":
    {...}} or an explicit dict_map and list_agents.  int_seed,
    str_knowledge, list_int_informed and overrides apply to both.
    """

    dict_overrides = dict_scenario.get('overrides', {})

    if 'str_builder' in dict_scenario:
        str_builder = dict_scenario['str_builder']
        if str_builder not in DICT_BUILDERS:
            raise ContractError('unknown scenario builder: ' + str(str_builder))
        dict_args = dict(dict_scenario.get('dict_args', {}))
        if 'int_seed' in dict_scenario:
            dict_args.setdefault('int_seed', dict_scenario['int_seed'])
        scenario = DICT_BUILDERS[str_builder](**dict_args)
    else:
        list_agents = [AgentSpec(a['int_id'], a['list_start'], a['list_goals'])
                       for a in dict_scenario['list_agents']]
        scenario = Scenario(dict_scenario.get('str_name', 'custom'), dict_scenario['dict_map'],
                            list_agents, dict_scenario.get('int_seed', 0))

    if 'str_knowledge' in dict_scenario:
        scenario.str_knowledge = dict_scenario['str_knowledge']
    if 'list_int_informed' in dict_scenario:
        scenario.list_int_informed = list(dict_scenario['list_int_informed'])

    for str_section, dict_section in dict_overrides.items():
        scenario.dict_overrides.setdefault(str_section, {}).update(dict_section)

    scenario.__post_init__()
    return scenario


def fn_read_scenario_json(str_json_path):
    with open(str_json_path) as f:
        dict_scenario = json.load(f)
    return fn_scenario_from_dict(dict_scenario)
# ............................................................
