# Tests of the path search timing sweep, its plot and the command line
# entry point.
#
# Created by: Andy Carter, PE
# Created - 2024.04.19
# Last revised - 2024.06.03
#
# swarm-group-plan - tests


# ************************************************************
import json

import numpy as np
import pandas as pd
import pytest

from benchmark_emapf import (fn_bench_job, fn_bench_map, fn_benchmark_emapf,
                             fn_random_endpoints, fn_summarize_benchmark)
from config_utils import fn_apply_overrides
from plot_emapf_benchmark import fn_plot_benchmark
from swarm_group_plan import fn_main
# ************************************************************


STR_SMALL_INI = """[bench_mapf]
list_int_agents = 2, 3
list_flt_spacing = 4.0
list_flt_volume = 64.0
flt_height = 4.0
int_seeds = 2
"""


# ------------------------------------------------------------
@pytest.fixture
def dict_small_config(dict_config):
    return fn_apply_overrides(dict_config, {'bench_mapf': {'list_int_agents': [2, 3],
                                                           'list_flt_spacing': [4.0],
                                                           'list_flt_volume': [64.0],
                                                           'int_seeds': 2}})
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def test_bench_map_volume():
    grid = fn_bench_map(64.0, 4.0, 2.0, 0.25, 0.5, 0)
    assert grid.tpl_dims == (8, 8, 8)
    assert grid.b_has_obstacles


def test_random_endpoints_are_free_and_distinct():
    grid = fn_bench_map(64.0, 4.0, 2.0, 0.25, 0.5, 0)
    list_starts, list_goals = fn_random_endpoints(grid, 4, np.random.default_rng(0))
    assert len(set(list_starts)) == 4 and len(set(list_goals)) == 4
    assert not set(list_starts) & set(list_goals)
    assert not any(grid.arr_occupancy[c] for c in list_starts + list_goals)


def test_bench_job_row(dict_small_config):
    dict_row = fn_bench_job((2, 4.0, 64.0, 0, dict_small_config['bench_mapf'], dict_small_config['mapf']))
    assert dict_row['b_solved']
    assert dict_row['int_nodes'] >= 1
    assert dict_row['flt_time'] > 0.0


def test_summary_flags_slow_cells():
    df_runs = pd.DataFrame({'int_agents': [2, 2, 4, 4], 'flt_spacing': [4.0] * 4,
                            'flt_volume': [64.0] * 4, 'flt_time': [0.01, 0.03, 0.2, 0.1],
                            'int_nodes': [1, 1, 5, 7], 'b_solved': [True, True, True, False]})
    df_summary = fn_summarize_benchmark(df_runs, 0.1)
    assert df_summary['flt_mean_time'].tolist() == pytest.approx([0.02, 0.15])
    assert df_summary['b_over_threshold'].tolist() == [False, True]
    assert df_summary['flt_solved'].tolist() == pytest.approx([1.0, 0.5])
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def test_small_sweep_and_plot(dict_small_config, tmp_path):
    df_runs, df_summary = fn_benchmark_emapf(dict_small_config, str(tmp_path), int_seed=0, int_cores=1)
    assert len(df_runs) == 4
    assert len(df_summary) == 2
    assert df_runs['b_solved'].all()
    assert (tmp_path / 'bench_mapf_runs.csv').exists()
    assert (tmp_path / 'bench_mapf_summary.csv').exists()

    str_png = fn_plot_benchmark(df_summary, str(tmp_path / 'timing.png'))
    assert (tmp_path / 'timing.png').stat().st_size > 0
    assert str_png.endswith('timing.png')


def test_cli_bench_mapf(tmp_path):
    str_ini = tmp_path / 'small.ini'
    str_ini.write_text(STR_SMALL_INI)
    str_out = tmp_path / 'bench'
    assert fn_main(['bench-mapf', '--config', str(str_ini), '--out-dir', str(str_out)]) == 0
    assert (str_out / 'bench_mapf_timing.png').exists()


def test_cli_gradcheck(tmp_path):
    assert fn_main(['gradcheck', '-t', 'time', 'effort', '-n', '2', '--out-dir', str(tmp_path)]) == 0
    df_report = pd.read_csv(tmp_path / 'gradcheck.csv')
    assert set(df_report['term']) == {'time', 'effort'}


def test_cli_run(tmp_path):
    str_json = tmp_path / 'short.json'
    str_json.write_text(json.dumps({'str_builder': 'single_straight', 'dict_args': {'flt_length': 3.0}}))
    str_out = tmp_path / 'run'
    assert fn_main(['run', '-i', str(str_json), '--out-dir', str(str_out), '--seed', '2']) == 0
    assert (str_out / 'run_summary.json').exists()


def test_cli_rejects_missing_files(tmp_path):
    with pytest.raises(SystemExit):
        fn_main(['run', '-i', str(tmp_path / 'nope.json')])
    with pytest.raises(SystemExit):
        fn_main(['gradcheck', '-t', 'gravity'])
    with pytest.raises(SystemExit):
        fn_main([])
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
