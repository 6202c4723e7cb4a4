# Finite difference check of the analytic gradients of every penalty term
# with respect to the stacked waypoints and virtual times of a group.
#
# Created by: Andy Carter, PE
# Created - 2024.05.13
# Last revised - 2024.05.30 - floor map for the obstacle term
#
# swarm-group-plan - gradient check


# ************************************************************
from dataclasses import replace

import numpy as np
import pandas as pd
import tqdm

from grid_map_3d import fn_build_distance_field, fn_empty_map
from joint_optimization import fn_joint_objective, fn_pack_variables
from minco_trajectory import MincoTrajectory
from penalty_terms import LIST_TERM_NAMES, PenaltyWeights
# ************************************************************


# ------------------------------------------------------------
def fn_floor_map(flt_floor_height, flt_resolution=0.1):

    """
    Map whose only obstacle is a floor slab.  Above the slab the distance
    field is linear in z, so its trilinear interpolant has a continuous
    gradient and central differences are meaningful everywhere.
    """

    grid = fn_empty_map((-2.0, -2.0, 0.0), (8.0, 8.0, 4.0), flt_resolution)
    int_top = int(np.floor(flt_floor_height / flt_resolution))
    grid.arr_occupancy[:, :, :max(1, int_top)] = True
    return fn_build_distance_field(grid)


def fn_random_instance(rng, int_agents, int_pieces):

    """
    Random group with active constraints: tight dynamic limits, clearances
    larger than the spacing of the agents and a floor close below them.

    Returns:
        list_trajs, weights, grid
    """

    list_trajs = []
    for _ in range(int_agents):
        arr_head = np.vstack([rng.uniform([0.5, 0.5, 0.8], [5.5, 5.5, 1.6]),
                              rng.uniform(-1.0, 1.0, 3),
                              rng.uniform(-1.0, 1.0, 3)])
        arr_tail = np.vstack([rng.uniform([0.5, 0.5, 0.8], [5.5, 5.5, 1.6]),
                              rng.uniform(-0.5, 0.5, 3),
                              np.zeros(3)])
        arr_q = rng.uniform([0.5, 0.5, 0.8], [5.5, 5.5, 1.6], size=(int_pieces - 1, 3))
        arr_T = rng.uniform(0.6, 1.6, size=int_pieces)
        list_trajs.append(MincoTrajectory(arr_q, arr_T, arr_head, arr_tail))

    weights = PenaltyWeights(arr_lambda=np.ones(6),
                             arr_chi=rng.uniform(0.5, 2.0, 5),
                             int_kappa=int(rng.integers(4, 12)),
                             flt_clearance_obstacle=1.0,
                             flt_clearance_swarm=3.0,
                             flt_v_max=1.0, flt_a_max=2.0, flt_j_max=5.0,
                             arr_downwash=np.diag([1.0, 1.0, rng.uniform(0.2, 1.0)]))

    grid = fn_floor_map(rng.uniform(0.2, 0.5))
    return list_trajs, weights, grid
# ------------------------------------------------------------


# ````````````````````````````````````````````````````````````
def fn_relative_error(list_trajs, weights, grid, int_term, flt_step=1.0e-6):
    # || g - fd || / max(|| fd ||, 1e-6) with central differences
    arr_lambda = np.zeros(6)
    arr_lambda[int_term] = 1.0
    weights_term = replace(weights, arr_lambda=arr_lambda)

    arr_x = fn_pack_variables(list_trajs)
    _, arr_grad, _, _ = fn_joint_objective(arr_x, list_trajs, weights_term, grid)

    arr_fd = np.zeros_like(arr_x)
    for i in range(arr_x.size):
        arr_plus = arr_x.copy()
        arr_minus = arr_x.copy()
        arr_plus[i] += flt_step
        arr_minus[i] -= flt_step
        flt_plus = fn_joint_objective(arr_plus, list_trajs, weights_term, grid)[0]
        flt_minus = fn_joint_objective(arr_minus, list_trajs, weights_term, grid)[0]
        arr_fd[i] = (flt_plus - flt_minus) / (2.0 * flt_step)

    return float(np.linalg.norm(arr_grad - arr_fd) / max(np.linalg.norm(arr_fd), 1.0e-6))


def fn_gradcheck(list_terms=None, int_instances=50, int_seed=0, int_max_agents=4,
                 int_max_pieces=5, flt_threshold=1.0e-5, b_progress=True):

    """
    Relative gradient error of each term on randomized instances.

    Args:
        list_terms: term names (effort, time, feasibility, obstacle,
            reciprocal, uniformity); all when None
        int_instances: instances per term
        int_seed: seed of the instance generator
        int_max_agents: largest group size drawn
        int_max_pieces: largest piece count drawn
        flt_threshold: largest accepted relative error

    Returns:
        DataFrame with one row per (term, instance)
    """

    if list_terms is None:
        list_terms = list(LIST_TERM_NAMES)

    rng = np.random.default_rng(int_seed)
    list_jobs = [(str_term, i) for str_term in list_terms for i in range(int_instances)]

    list_rows = []
    for str_term, int_instance in tqdm.tqdm(list_jobs, total=len(list_jobs), desc='   -- Gradients',
                                            bar_format="{desc}:({n_fmt}/{total_fmt})|{bar}| {percentage:.1f}%",
                                            ncols=65, disable=not b_progress):
        int_agents = int(rng.integers(1, int_max_agents + 1))
        int_pieces = int(rng.integers(1, int_max_pieces + 1))
        list_trajs, weights, grid = fn_random_instance(rng, int_agents, int_pieces)
        flt_err = fn_relative_error(list_trajs, weights, grid, LIST_TERM_NAMES.index(str_term))
        list_rows.append([str_term, int_instance, int_agents, int_pieces, flt_err, flt_err <= flt_threshold])

    return pd.DataFrame(list_rows, columns=['term', 'instance', 'agents', 'pieces', 'rel_err', 'b_pass'])
# ````````````````````````````````````````````````````````````
