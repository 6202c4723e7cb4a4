# Bounded-suboptimal multi-agent path search on the voxel grid.  A
# conflict tree is searched with a focal list (nodes whose cost is within
# omega of the lowest lower bound, expanded by fewest conflicts); each
# agent is replanned by a space-time focal search whose admission cost
# adds a tie-breaker, the distance from the straight start-goal line.
#
# Created by: Andy Carter, PE
# Created - 2024.03.18
# Last revised - 2024.05.09 - goal dwell conflicts and node re-opening
#
# swarm-group-plan - discrete multi-agent paths


# ************************************************************
from dataclasses import dataclass
import heapq
import itertools
import json
import math
import time

import numpy as np
import pandas as pd

from grid_map_3d import fn_cell_to_world, fn_import_map_json
from planner_errors import ContractError, MapfInfeasibleError, MapfTimeoutError
# ************************************************************


# 26-connected moves followed by the wait action, cost in cell units
LIST_MOVES = [((i, j, k), math.sqrt(i * i + j * j + k * k))
              for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
              if (i, j, k) != (0, 0, 0)] + [((0, 0, 0), 1.0)]


# ------------------------------------------------------------
@dataclass
class SpaceTimePath:
    """Cells visited at t = 0, 1, 2 ...; the agent then stays on the last"""

    list_cells: list
    flt_cost: float = 0.0

    def fn_cell_at(self, int_t):
        return self.list_cells[min(int_t, len(self.list_cells) - 1)]


@dataclass(frozen=True)
class Constraint:
    # vertex constraint, or an edge constraint when tpl_from_cell is set
    int_agent: int
    tpl_cell: tuple
    int_t: int
    tpl_from_cell: tuple = None


@dataclass
class Conflict:
    tpl_agents: tuple
    str_kind: str
    tpl_cells: tuple
    int_t: int


@dataclass
class ConflictTreeNode:
    list_constraints: list
    list_paths: list
    list_f_min: list
    flt_cost: float = 0.0
    flt_lb: float = 0.0
    int_conflicts: int = 0
    int_id: int = 0

    def fn_refresh(self):
        self.flt_cost = float(sum(p.flt_cost for p in self.list_paths))
        self.flt_lb = float(sum(self.list_f_min))
        self.int_conflicts = fn_count_conflicts(self.list_paths)
        return self
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_tie_breaker(arr_node, arr_start, arr_goal, flt_weight=1.0):

    """
    Weighted distance from a node to the infinite line through start and
    goal; distance to the start when start and goal coincide.
    """

    arr_node = np.asarray(arr_node, dtype=float)
    arr_start = np.asarray(arr_start, dtype=float)
    arr_dir = np.asarray(arr_goal, dtype=float) - arr_start
    arr_rel = arr_node - arr_start

    flt_len = float(np.linalg.norm(arr_dir))
    if flt_len < 1e-12:
        return flt_weight * float(np.linalg.norm(arr_rel))

    flt_dist = float(np.linalg.norm(np.cross(arr_rel, arr_dir))) / flt_len
    return flt_weight * flt_dist
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_build_conflict_table(list_paths, int_skip_agent):
    # occupancy of every other agent: (cell, t) counts, moves and goal arrival
    dict_vertex = {}
    dict_edge = {}
    dict_goal = {}

    for int_agent, path in enumerate(list_paths):
        if path is None or int_agent == int_skip_agent:
            continue
        list_cells = path.list_cells
        for int_t, tpl_cell in enumerate(list_cells):
            dict_vertex[(tpl_cell, int_t)] = dict_vertex.get((tpl_cell, int_t), 0) + 1
            if int_t > 0 and list_cells[int_t - 1] != tpl_cell:
                tpl_key = (list_cells[int_t - 1], tpl_cell, int_t)
                dict_edge[tpl_key] = dict_edge.get(tpl_key, 0) + 1
        dict_goal.setdefault(list_cells[-1], []).append(len(list_cells) - 1)

    return dict_vertex, dict_edge, dict_goal


def fn_move_conflicts(tpl_table, tpl_from, tpl_to, int_t_to):
    dict_vertex, dict_edge, dict_goal = tpl_table
    int_count = dict_vertex.get((tpl_to, int_t_to), 0)
    for int_arrival in dict_goal.get(tpl_to, ()):
        if int_arrival < int_t_to:
            int_count += 1
    if tpl_from != tpl_to:
        int_count += dict_edge.get((tpl_to, tpl_from, int_t_to), 0)
    return int_count
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_low_level_search(int_agent, tpl_start, tpl_goal, list_constraints, grid,
                        flt_omega, flt_tie_weight=0.5, list_paths=None,
                        int_expansion_budget=200000, flt_deadline=None):

    """
    Space-time focal search for one agent.

    OPEN is ordered by g + h (its minimum is f_min, a lower bound on the
    constrained path cost); a node is admitted to FOCAL when
    g + h + tie-breaker <= omega * f_min, and FOCAL is expanded by the
    number of conflicts with the other agents' paths.  When FOCAL is empty
    the best OPEN node is expanded.  States are (cell, t) with t capped one
    step past the last constraint.

    The focal bound is taken on min(g + h) over OPEN, not on the minimum
    of g + h + tie-breaker.  The tie-breaker is non-negative, so this bound
    is the tighter of the two, and f_min stays a lower bound on the
    constrained path cost as the conflict tree requires.

    Args:
        int_agent: agent index (constraints for other agents are ignored)
        tpl_start: start cell
        tpl_goal: goal cell
        list_constraints: Constraint list
        grid: GridMap3D planning grid
        flt_omega: suboptimality factor >= 1
        flt_tie_weight: tie-breaker weight per cell
        list_paths: current paths of all agents for conflict counting
        int_expansion_budget: expansions before giving up
        flt_deadline: time.perf_counter() value at which to give up

    Returns:
        (SpaceTimePath, f_min)
    """

    arr_dims = grid.tpl_dims
    arr_occ = grid.arr_occupancy
    tpl_start = tuple(int(v) for v in tpl_start)
    tpl_goal = tuple(int(v) for v in tpl_goal)

    for tpl_cell in (tpl_start, tpl_goal):
        if any(tpl_cell[i] < 0 or tpl_cell[i] >= arr_dims[i] for i in range(3)):
            raise MapfInfeasibleError('agent ' + str(int_agent) + ' endpoint outside the grid')
        if arr_occ[tpl_cell]:
            raise MapfInfeasibleError('agent ' + str(int_agent) + ' endpoint is occupied')

    set_vertex = set()
    set_edge = set()
    int_last_goal_block = -1
    int_t_max = 0
    for c in list_constraints:
        if c.int_agent != int_agent:
            continue
        int_t_max = max(int_t_max, c.int_t)
        if c.tpl_from_cell is None:
            set_vertex.add((c.tpl_cell, c.int_t))
            if c.tpl_cell == tpl_goal:
                int_last_goal_block = max(int_last_goal_block, c.int_t)
        else:
            set_edge.add((c.tpl_from_cell, c.tpl_cell, c.int_t))
    int_t_cap = int_t_max + 1

    if (tpl_start, 0) in set_vertex:
        raise MapfInfeasibleError('agent ' + str(int_agent) + ' start is constrained at t=0')

    tpl_table = fn_build_conflict_table(list_paths or [], int_agent)

    # scalar form of fn_tie_breaker for the inner loop
    tpl_dir = tuple(tpl_goal[i] - tpl_start[i] for i in range(3))
    flt_dir_len = math.sqrt(sum(v * v for v in tpl_dir))
    if flt_dir_len > 0:
        tpl_unit = tuple(v / flt_dir_len for v in tpl_dir)

    def fn_h(tpl_cell):
        return math.dist(tpl_cell, tpl_goal)

    def fn_tie(tpl_cell):
        flt_rx = tpl_cell[0] - tpl_start[0]
        flt_ry = tpl_cell[1] - tpl_start[1]
        flt_rz = tpl_cell[2] - tpl_start[2]
        flt_rr = flt_rx * flt_rx + flt_ry * flt_ry + flt_rz * flt_rz
        if flt_dir_len == 0:
            return flt_tie_weight * math.sqrt(flt_rr)
        flt_proj = flt_rx * tpl_unit[0] + flt_ry * tpl_unit[1] + flt_rz * tpl_unit[2]
        return flt_tie_weight * math.sqrt(max(flt_rr - flt_proj * flt_proj, 0.0))

    # node record: cell, t, g, parent, conflicts, f_lb, f_one
    list_nodes = []
    dict_best_g = {}
    heap_lb = []
    heap_wait = []
    heap_focal = []
    set_closed = set()
    counter = itertools.count()

    def fn_push(tpl_cell, int_t, flt_g, int_parent, int_conf, flt_bound):
        flt_f = flt_g + fn_h(tpl_cell)
        flt_f1 = flt_f + fn_tie(tpl_cell)
        int_idx = len(list_nodes)
        list_nodes.append((tpl_cell, int_t, flt_g, int_parent, int_conf, flt_f, flt_f1))
        int_tick = next(counter)
        heapq.heappush(heap_lb, (flt_f, flt_f1, int_tick, int_idx))
        if flt_f1 <= flt_bound + 1e-9:
            heapq.heappush(heap_focal, (int_conf, flt_f1, int_tick, int_idx))
        else:
            heapq.heappush(heap_wait, (flt_f1, int_tick, int_idx))

    def fn_is_stale(int_idx):
        tpl_cell, int_t, flt_g = list_nodes[int_idx][:3]
        if int_idx in set_closed:
            return True
        return dict_best_g.get((tpl_cell, min(int_t, int_t_cap)), math.inf) < flt_g - 1e-12

    dict_best_g[(tpl_start, 0)] = 0.0
    flt_f_min = fn_h(tpl_start)
    fn_push(tpl_start, 0, 0.0, -1, 0, flt_omega * flt_f_min)

    int_expanded = 0
    while True:
        while heap_lb and fn_is_stale(heap_lb[0][3]):
            heapq.heappop(heap_lb)
        if not heap_lb:
            raise MapfInfeasibleError('agent ' + str(int_agent) + ' cannot reach its goal')

        flt_new_f_min = heap_lb[0][0]
        if flt_new_f_min > flt_f_min:
            flt_f_min = flt_new_f_min
        flt_bound = flt_omega * flt_f_min

        # admit waiting nodes whose f1 fell under the bound
        while heap_wait and heap_wait[0][0] <= flt_bound + 1e-9:
            flt_f1, int_tick, int_idx = heapq.heappop(heap_wait)
            if not fn_is_stale(int_idx):
                heapq.heappush(heap_focal, (list_nodes[int_idx][4], flt_f1, int_tick, int_idx))

        while heap_focal and fn_is_stale(heap_focal[0][3]):
            heapq.heappop(heap_focal)

        if heap_focal:
            int_idx = heapq.heappop(heap_focal)[3]
        else:
            int_idx = heapq.heappop(heap_lb)[3]

        tpl_cell, int_t, flt_g, int_parent, int_conf, flt_f, flt_f1 = list_nodes[int_idx]

        if tpl_cell == tpl_goal and int_t > int_last_goal_block:
            list_cells = []
            int_walk = int_idx
            while int_walk >= 0:
                list_cells.append(list_nodes[int_walk][0])
                int_walk = list_nodes[int_walk][3]
            list_cells.reverse()
            return SpaceTimePath(list_cells, flt_g), flt_f_min

        set_closed.add(int_idx)
        int_expanded += 1
        if int_expanded > int_expansion_budget:
            raise MapfTimeoutError('agent ' + str(int_agent) + ' exceeded the expansion budget')
        if flt_deadline is not None and (int_expanded & 255) == 0 and time.perf_counter() > flt_deadline:
            raise MapfTimeoutError('agent ' + str(int_agent) + ' exceeded the time budget')

        int_t_next = int_t + 1
        for tpl_move, flt_step in LIST_MOVES:
            tpl_next = (tpl_cell[0] + tpl_move[0], tpl_cell[1] + tpl_move[1], tpl_cell[2] + tpl_move[2])
            if (tpl_next[0] < 0 or tpl_next[1] < 0 or tpl_next[2] < 0 or
                    tpl_next[0] >= arr_dims[0] or tpl_next[1] >= arr_dims[1] or tpl_next[2] >= arr_dims[2]):
                continue
            if arr_occ[tpl_next]:
                continue
            if (tpl_next, int_t_next) in set_vertex:
                continue
            if (tpl_cell, tpl_next, int_t_next) in set_edge:
                continue

            flt_g_next = flt_g + flt_step
            tpl_key = (tpl_next, min(int_t_next, int_t_cap))
            if dict_best_g.get(tpl_key, math.inf) <= flt_g_next + 1e-12:
                continue
            dict_best_g[tpl_key] = flt_g_next

            int_conf_next = int_conf + fn_move_conflicts(tpl_table, tpl_cell, tpl_next, int_t_next)
            fn_push(tpl_next, int_t_next, flt_g_next, int_idx, int_conf_next, flt_bound)
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ````````````````````````````````````````````````````````````
def fn_get_first_conflict(list_paths):

    """
    Earliest conflict between two paths: vertex conflicts are checked
    before edge (swap) conflicts at the same timestep and the lowest agent
    pair wins the remaining ties.  An edge conflict is reported at the
    arrival timestep with the first agent moving tpl_cells[0] -> [1].
    """

    if any(len(p.list_cells) == 0 for p in list_paths):
        raise ContractError('paths must be nonempty')

    int_agents = len(list_paths)
    int_horizon = max(len(p.list_cells) for p in list_paths)

    for int_t in range(int_horizon):
        list_now = [p.fn_cell_at(int_t) for p in list_paths]

        for i in range(int_agents):
            for j in range(i + 1, int_agents):
                if list_now[i] == list_now[j]:
                    return Conflict((i, j), 'vertex', (list_now[i],), int_t)

        if int_t == 0:
            continue
        list_prev = [p.fn_cell_at(int_t - 1) for p in list_paths]
        for i in range(int_agents):
            if list_prev[i] == list_now[i]:
                continue
            for j in range(i + 1, int_agents):
                if list_prev[i] == list_now[j] and list_now[i] == list_prev[j]:
                    return Conflict((i, j), 'edge', (list_prev[i], list_now[i]), int_t)

    return None
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_count_conflicts(list_paths):
    # all vertex and edge conflicts over all pairs and timesteps
    int_agents = len(list_paths)
    if int_agents < 2:
        return 0

    int_horizon = max(len(p.list_cells) for p in list_paths)
    int_count = 0

    for int_t in range(int_horizon):
        list_now = [p.fn_cell_at(int_t) for p in list_paths]
        list_prev = [p.fn_cell_at(int_t - 1) for p in list_paths] if int_t > 0 else list_now
        for i in range(int_agents):
            for j in range(i + 1, int_agents):
                if list_now[i] == list_now[j]:
                    int_count += 1
                elif (list_prev[i] != list_now[i] and list_prev[i] == list_now[j]
                      and list_now[i] == list_prev[j]):
                    int_count += 1

    return int_count
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_high_level_focal_admit(list_open_nodes, flt_lb, flt_omega):
    # conflict tree nodes whose cost is within omega of the lower bound
    flt_bound = flt_lb * flt_omega + 1e-9
    return [n for n in list_open_nodes if n.flt_cost <= flt_bound]
# ````````````````````````````````````````````````````````````


# ------------------------------------------------------------
def fn_constraints_from_conflict(conflict):
    # one constraint per agent of the conflict
    int_a, int_b = conflict.tpl_agents
    if conflict.str_kind == 'vertex':
        tpl_cell = conflict.tpl_cells[0]
        return [Constraint(int_a, tpl_cell, conflict.int_t),
                Constraint(int_b, tpl_cell, conflict.int_t)]

    tpl_from, tpl_to = conflict.tpl_cells
    return [Constraint(int_a, tpl_to, conflict.int_t, tpl_from),
            Constraint(int_b, tpl_from, conflict.int_t, tpl_to)]
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_plan_emapf(list_starts, list_goals, grid, flt_omega=1.3, flt_tie_weight=0.5,
                  int_node_budget=100000, flt_time_budget=0.1, int_n_max=8,
                  int_expansion_budget=200000, dict_stats=None):

    """
    Conflict-free, bounded-suboptimal paths for a group of agents.

    Args:
        list_starts: start cells
        list_goals: goal cells
        grid: GridMap3D planning grid
        flt_omega: suboptimality factor >= 1
        flt_tie_weight: tie-breaker weight per cell
        int_node_budget: conflict tree nodes before giving up
        flt_time_budget: wall time (s) before giving up; None or <= 0 disables
        int_n_max: largest allowed group
        int_expansion_budget: low-level expansions per call
        dict_stats: optional dictionary filled with search statistics

    Returns:
        list of SpaceTimePath, one per agent
    """

    flt_start_time = time.perf_counter()
    flt_deadline = None
    if flt_time_budget is not None and flt_time_budget > 0:
        flt_deadline = flt_start_time + flt_time_budget

    int_agents = len(list_starts)
    if flt_omega < 1.0:
        raise ContractError('omega must be >= 1')
    if int_agents != len(list_goals):
        raise ContractError('starts and goals differ in length')
    if int_agents < 1 or int_agents > int_n_max:
        raise ContractError('agent count must be within 1..' + str(int_n_max))

    list_starts = [tuple(int(v) for v in s) for s in list_starts]
    list_goals = [tuple(int(v) for v in g) for g in list_goals]
    if len(set(list_starts)) != int_agents or len(set(list_goals)) != int_agents:
        raise MapfInfeasibleError('starts and goals must be pairwise distinct')

    if dict_stats is None:
        dict_stats = {}
    dict_stats['int_nodes'] = 0
    dict_stats['list_lb'] = []

    # root: agents planned in order, each avoiding the ones before it
    list_paths = [None] * int_agents
    list_f_min = [0.0] * int_agents
    for i in range(int_agents):
        list_paths[i], list_f_min[i] = fn_low_level_search(
            i, list_starts[i], list_goals[i], [], grid, flt_omega, flt_tie_weight,
            list_paths, int_expansion_budget, flt_deadline)

    counter = itertools.count()
    node_root = ConflictTreeNode([], list_paths, list_f_min, int_id=next(counter)).fn_refresh()
    list_open = [node_root]

    while list_open:
        if dict_stats['int_nodes'] >= int_node_budget:
            raise MapfTimeoutError('conflict tree node budget exhausted')
        if flt_deadline is not None and time.perf_counter() > flt_deadline:
            raise MapfTimeoutError('search time budget of ' + str(flt_time_budget) + ' s exhausted')

        flt_lb = min(n.flt_lb for n in list_open)
        dict_stats['list_lb'].append(flt_lb)

        list_focal = fn_high_level_focal_admit(list_open, flt_lb, flt_omega)
        node = min(list_focal, key=lambda n: (n.int_conflicts, n.flt_cost, n.int_id))
        list_open.remove(node)
        dict_stats['int_nodes'] += 1

        conflict = fn_get_first_conflict(node.list_paths)
        if conflict is None:
            dict_stats['flt_time'] = time.perf_counter() - flt_start_time
            dict_stats['flt_cost'] = node.flt_cost
            dict_stats['flt_lb'] = flt_lb
            return node.list_paths

        for constraint in fn_constraints_from_conflict(conflict):
            int_a = constraint.int_agent
            list_constraints = node.list_constraints + [constraint]
            list_child_paths = list(node.list_paths)
            try:
                path_new, flt_f_min_new = fn_low_level_search(
                    int_a, list_starts[int_a], list_goals[int_a], list_constraints, grid,
                    flt_omega, flt_tie_weight, list_child_paths,
                    int_expansion_budget, flt_deadline)
            except MapfInfeasibleError:
                continue

            list_child_paths[int_a] = path_new
            list_child_f_min = list(node.list_f_min)
            list_child_f_min[int_a] = max(flt_f_min_new, node.list_f_min[int_a])

            node_child = ConflictTreeNode(list_constraints, list_child_paths,
                                          list_child_f_min, int_id=next(counter)).fn_refresh()
            list_open.append(node_child)

    raise MapfInfeasibleError('conflict tree exhausted without a solution')
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_validate_solution(list_paths, grid, list_starts=None, list_goals=None):

    """
    Problems found in a plan; an empty list means it is valid.
    """

    list_problems = []
    arr_dims = np.array(grid.tpl_dims)

    for int_agent, path in enumerate(list_paths):
        list_cells = path.list_cells
        if list_starts is not None and list_cells[0] != tuple(list_starts[int_agent]):
            list_problems.append('agent %d does not start at its start cell' % int_agent)
        if list_goals is not None and list_cells[-1] != tuple(list_goals[int_agent]):
            list_problems.append('agent %d does not end at its goal cell' % int_agent)

        for int_t, tpl_cell in enumerate(list_cells):
            arr_cell = np.array(tpl_cell)
            if np.any(arr_cell < 0) or np.any(arr_cell >= arr_dims):
                list_problems.append('agent %d leaves the grid at t=%d' % (int_agent, int_t))
                continue
            if grid.arr_occupancy[tpl_cell]:
                list_problems.append('agent %d visits occupied cell at t=%d' % (int_agent, int_t))
            if int_t > 0 and np.max(np.abs(arr_cell - np.array(list_cells[int_t - 1]))) > 1:
                list_problems.append('agent %d jumps at t=%d' % (int_agent, int_t))

    int_conflicts = fn_count_conflicts(list_paths)
    if int_conflicts > 0:
        list_problems.append('%d conflicts between agents' % int_conflicts)

    return list_problems
# ------------------------------------------------------------


# ............................................................
def fn_paths_to_df(list_paths, grid):
    # space-time paths as rows (agent, t, x, y, z) of cell centres
    list_rows = []
    for int_agent, path in enumerate(list_paths):
        for int_t, tpl_cell in enumerate(path.list_cells):
            arr_p = fn_cell_to_world(grid, tpl_cell)
            list_rows.append([int_agent, int_t, arr_p[0], arr_p[1], arr_p[2]])

    return pd.DataFrame(list_rows, columns=['agent', 't', 'x', 'y', 'z'])


def fn_read_mapf_instance(str_json_path):
    # {"str_map_json": ..., "list_starts": [[i,j,k]...], "list_goals": ..., "flt_omega": ...}
    with open(str_json_path) as f:
        dict_instance = json.load(f)

    grid = fn_import_map_json(dict_instance['str_map_json'])
    list_starts = [tuple(s) for s in dict_instance['list_starts']]
    list_goals = [tuple(g) for g in dict_instance['list_goals']]
    flt_omega = float(dict_instance.get('flt_omega', 1.3))

    return grid, list_starts, list_goals, flt_omega
# ............................................................
