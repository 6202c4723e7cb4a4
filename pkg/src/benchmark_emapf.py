# Search time sweep of the multi-agent path search over agent count,
# obstacle spacing and map volume on seeded random forests.  Each cell of
# the sweep is repeated over seeds; cells whose mean search time exceeds
# the real-time threshold are flagged.
#
# Created by: Andy Carter, PE
# Created - 2024.04.18
# Last revised - 2024.05.24 - sweep cells on a process pool
#
# swarm-group-plan - path search benchmark


# ************************************************************
import itertools
import os
import time

from multiprocessing import Pool
import numpy as np
import pandas as pd
import tqdm

from emapf_search import fn_plan_emapf, fn_validate_solution
from grid_map_3d import fn_random_forest_map
from planner_errors import MapfInfeasibleError, MapfTimeoutError
# ************************************************************


# ------------------------------------------------------------
def fn_bench_map(flt_volume, flt_height, flt_spacing, flt_pillar_radius, flt_resolution, int_seed):
    # square footprint whose area times the height gives the volume
    flt_side = float(np.sqrt(flt_volume / flt_height))
    return fn_random_forest_map(int_seed, flt_spacing, flt_pillar_radius,
                                (0.0, 0.0, 0.0), (flt_side, flt_side, flt_height),
                                flt_resolution)


def fn_random_endpoints(grid, int_agents, rng):
    # distinct free start cells and distinct free goal cells
    arr_free = np.argwhere(~grid.arr_occupancy)
    arr_pick = rng.choice(len(arr_free), size=2 * int_agents, replace=False)
    list_cells = [tuple(int(v) for v in arr_free[i]) for i in arr_pick]
    return list_cells[:int_agents], list_cells[int_agents:]
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_bench_job(tpl_job):

    """
    One timed search.

    Args:
        tpl_job: (agents, spacing, volume, seed, bench section, mapf section)

    Returns:
        dict row of the run table
    """

    int_agents, flt_spacing, flt_volume, int_seed, dict_bench, dict_mapf = tpl_job

    grid = fn_bench_map(flt_volume, dict_bench['flt_height'], flt_spacing,
                        dict_bench['flt_pillar_radius'], dict_bench['flt_resolution'], int_seed)
    rng = np.random.default_rng(int_seed)
    list_starts, list_goals = fn_random_endpoints(grid, int_agents, rng)

    dict_stats = {}
    b_solved = False
    flt_start = time.perf_counter()
    try:
        list_paths = fn_plan_emapf(list_starts, list_goals, grid,
                                   flt_omega=dict_mapf['flt_omega'],
                                   flt_tie_weight=dict_mapf['flt_tie_weight'],
                                   int_node_budget=dict_mapf['int_node_budget'],
                                   flt_time_budget=None,
                                   int_n_max=max(int_agents, 1),
                                   int_expansion_budget=dict_mapf['int_expansion_budget'],
                                   dict_stats=dict_stats)
        b_solved = len(fn_validate_solution(list_paths, grid, list_starts, list_goals)) == 0
    except (MapfTimeoutError, MapfInfeasibleError):
        pass
    flt_time = time.perf_counter() - flt_start

    return {'int_agents': int_agents, 'flt_spacing': flt_spacing, 'flt_volume': flt_volume,
            'int_seed': int_seed, 'flt_time': flt_time, 'int_nodes': dict_stats.get('int_nodes', 0),
            'flt_cost': dict_stats.get('flt_cost', np.nan), 'b_solved': b_solved}
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_summarize_benchmark(df_runs, flt_threshold):
    # mean search time per sweep cell, flagged above the threshold
    df_summary = df_runs.groupby(['int_agents', 'flt_spacing', 'flt_volume'], as_index=False).agg(
        flt_mean_time=('flt_time', 'mean'),
        flt_max_time=('flt_time', 'max'),
        flt_mean_nodes=('int_nodes', 'mean'),
        flt_solved=('b_solved', 'mean'))
    df_summary['b_over_threshold'] = df_summary['flt_mean_time'] > flt_threshold
    return df_summary


def fn_benchmark_emapf(dict_config, str_out_dir=None, int_seed=0, int_cores=None):

    """
    Run the sweep of the [bench_mapf] section.

    Args:
        dict_config: typed global configuration
        str_out_dir: folder for bench_mapf_runs.csv and bench_mapf_summary.csv
        int_seed: first seed; cells use int_seed .. int_seed + int_seeds - 1
        int_cores: processes; [bench_mapf] int_cores when None

    Returns:
        df_runs, df_summary
    """

    dict_bench = dict_config['bench_mapf']
    dict_mapf = dict_config['mapf']
    if int_cores is None:
        int_cores = dict_bench['int_cores']

    list_seeds = list(range(int_seed, int_seed + dict_bench['int_seeds']))
    list_jobs = [(a, s, v, k, dict_bench, dict_mapf) for a, s, v, k in
                 itertools.product(dict_bench['list_int_agents'], dict_bench['list_flt_spacing'],
                                   dict_bench['list_flt_volume'], list_seeds)]

    str_bar = "{desc}:({n_fmt}/{total_fmt})|{bar}| {percentage:.1f}%"
    if int_cores > 1:
        with Pool(processes=int_cores) as p:
            list_rows = list(tqdm.tqdm(p.imap(fn_bench_job, list_jobs), total=len(list_jobs),
                                       desc='   -- Search sweep', bar_format=str_bar, ncols=65))
    else:
        list_rows = [fn_bench_job(j) for j in tqdm.tqdm(list_jobs, total=len(list_jobs),
                                                        desc='   -- Search sweep',
                                                        bar_format=str_bar, ncols=65)]

    df_runs = pd.DataFrame(list_rows)
    df_summary = fn_summarize_benchmark(df_runs, dict_bench['flt_threshold'])

    if str_out_dir:
        os.makedirs(str_out_dir, exist_ok=True)
        df_runs.to_csv(os.path.join(str_out_dir, 'bench_mapf_runs.csv'), index=False)
        df_summary.to_csv(os.path.join(str_out_dir, 'bench_mapf_summary.csv'), index=False)

    return df_runs, df_summary
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
