# Tests of the finite difference gradient suite.  The full run of fifty
# instances per term is marked slow.
#
# Created by: Andy Carter, PE
# Created - 2024.04.16
# Last revised - 2024.05.21
#
# swarm-group-plan - tests


# ************************************************************
import numpy as np
import pytest

from gradient_check import fn_floor_map, fn_gradcheck, fn_random_instance
from grid_map_3d import fn_distance_and_gradient
from penalty_terms import LIST_TERM_NAMES
# ************************************************************


def test_floor_map_field_is_linear():
    grid = fn_floor_map(0.3)
    arr_pts = np.array([[1.0, 1.0, 1.0], [2.0, 3.0, 1.5], [4.0, 0.5, 2.0]])
    arr_d, arr_grad, arr_flag = fn_distance_and_gradient(grid, arr_pts)
    assert not arr_flag.any()
    # distance grows one for one with height above the slab
    assert np.diff(arr_d) == pytest.approx([0.5, 0.5], abs=1e-9)
    assert arr_grad == pytest.approx(np.tile([0.0, 0.0, 1.0], (3, 1)), abs=1e-9)


def test_random_instance_shapes(rng):
    list_trajs, weights, grid = fn_random_instance(rng, 3, 4)
    assert len(list_trajs) == 3
    assert all(t.int_pieces == 4 for t in list_trajs)
    assert weights.flt_clearance_swarm == 3.0
    assert grid.b_has_obstacles


def test_small_gradcheck_passes():
    df_report = fn_gradcheck(['effort', 'time', 'uniformity'], int_instances=3, int_seed=1,
                             int_max_agents=2, int_max_pieces=3, b_progress=False)
    assert list(df_report.columns) == ['term', 'instance', 'agents', 'pieces', 'rel_err', 'b_pass']
    assert len(df_report) == 9
    assert df_report['b_pass'].all(), df_report.to_string()


@pytest.mark.slow
def test_full_gradcheck_passes():
    df_report = fn_gradcheck(int_instances=50, int_seed=0, b_progress=False)
    assert set(df_report['term']) == set(LIST_TERM_NAMES)
    assert len(df_report) == 50 * len(LIST_TERM_NAMES)
    assert df_report['rel_err'].max() <= 1.0e-5, df_report.sort_values('rel_err').tail().to_string()
