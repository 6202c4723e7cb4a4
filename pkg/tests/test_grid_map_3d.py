# Tests of the voxel map, its distance field and the map builders.
#
# Created by: Andy Carter, PE
# Created - 2024.03.14
# Last revised - 2024.06.10
#
# swarm-group-plan - tests


# ************************************************************
import itertools

import numpy as np
import pytest

from grid_map_3d import (GridMap3D, fn_add_pillar, fn_build_distance_field, fn_cell_to_world,
                         fn_coarsen_map, fn_crop_map, fn_distance_and_gradient, fn_empty_map,
                         fn_export_map_json, fn_import_map_json, fn_inflate_map, fn_is_inside,
                         fn_is_occupied, fn_line_of_sight, fn_merge_maps, fn_nearest_free_cell,
                         fn_observe_map, fn_random_forest_map, fn_random_forest_pillars,
                         fn_set_occupied, fn_wall_with_gate_map, fn_world_to_cell)
from planner_errors import MapBoundsError, MapConfigError, MapStateError
# ************************************************************


# ------------------------------------------------------------
def fn_brute_force_distance(grid, arr_point):
    # distance from a point to the nearest occupied cell centre
    arr_occ = np.argwhere(grid.arr_occupancy)
    arr_centres = grid.arr_origin + (arr_occ + 0.5) * grid.flt_resolution
    return float(np.min(np.linalg.norm(arr_centres - arr_point, axis=1)))
# ------------------------------------------------------------


def test_world_to_cell_and_back():
    grid = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    assert grid.tpl_dims == (10, 10, 10)
    assert fn_world_to_cell(grid, (0.05, 0.05, 0.05)) == (0, 0, 0)
    assert fn_world_to_cell(grid, (0.15, 0.0, 0.0)) == (1, 0, 0)
    assert fn_cell_to_world(grid, (1, 2, 3)) == pytest.approx([0.15, 0.25, 0.35])
    with pytest.raises(MapBoundsError):
        fn_world_to_cell(grid, (-0.1, 0.0, 0.0))
    # bounds errors are also index errors
    with pytest.raises(IndexError):
        fn_world_to_cell(grid, (1.0, 0.5, 0.5))

    assert fn_is_inside(grid, (0.5, 0.5, 0.5))
    assert not fn_is_inside(grid, (0.5, 1.5, 0.5))


def test_bad_geometry_is_a_config_error():
    with pytest.raises(MapConfigError):
        fn_empty_map((0, 0, 0), (0, 1, 1), 0.1)
    with pytest.raises(MapConfigError):
        GridMap3D((0, 0, 0), (2, 2, 2), 0.1, arr_occupancy=np.zeros((2, 2, 3), dtype=bool))


def test_occupancy_and_inflation():
    grid = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    assert not fn_is_occupied(grid, (3, 3, 3))

    fn_set_occupied(grid, (3, 3, 3))
    assert fn_is_occupied(grid, (3, 3, 3))
    fn_set_occupied(grid, arr_point=(0.75, 0.75, 0.75))
    assert fn_is_occupied(grid, (7, 7, 7))
    with pytest.raises(MapBoundsError):
        fn_is_occupied(grid, (10, 0, 0))

    grid_inflated = fn_inflate_map(grid, 0.1)
    assert fn_is_occupied(grid_inflated, (4, 3, 3))
    assert fn_is_occupied(grid_inflated, (3, 2, 3))
    # the diagonal neighbour lies sqrt(2) cells away
    assert not fn_is_occupied(grid_inflated, (4, 4, 3))
    assert not fn_is_occupied(grid, (4, 3, 3))


def test_inflation_matches_euclidean_ball(rng):
    grid = fn_empty_map((0, 0, 0), (1.2, 1.2, 1.2), 0.1)
    for tpl_cell in rng.integers(0, 12, size=(4, 3)):
        fn_set_occupied(grid, tuple(tpl_cell))
    flt_radius = 0.25
    grid_inflated = fn_inflate_map(grid, flt_radius)

    arr_occ = np.argwhere(grid.arr_occupancy)
    for tpl_cell in itertools.product(range(12), range(12), range(12)):
        flt_d = np.min(np.linalg.norm(arr_occ - np.array(tpl_cell), axis=1)) * 0.1
        assert grid_inflated.arr_occupancy[tpl_cell] == (flt_d <= flt_radius + 1e-9)


def test_distance_on_empty_map_is_the_sentinel():
    grid = fn_build_distance_field(fn_empty_map((0, 0, 0), (2, 2, 2), 0.1, flt_boundary_distance=10.0))
    flt_d, arr_grad, b_out = fn_distance_and_gradient(grid, (1.0, 1.0, 1.0))
    assert flt_d == pytest.approx(10.0)
    assert arr_grad == pytest.approx(np.zeros(3))
    assert not b_out


def test_distance_requires_a_built_field():
    grid = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    with pytest.raises(MapStateError):
        fn_distance_and_gradient(grid, (0.5, 0.5, 0.5))
    fn_build_distance_field(grid)
    fn_set_occupied(grid, (2, 2, 2))
    with pytest.raises(MapStateError):
        fn_distance_and_gradient(grid, (0.5, 0.5, 0.5))


def test_distance_to_a_single_cell():
    # cell centres fall on multiples of 0.1 m
    grid = fn_empty_map((-1.05, -1.05, -1.05), (2.05, 1.05, 1.05), 0.1)
    fn_set_occupied(grid, arr_point=(1.0, 0.0, 0.0))
    fn_build_distance_field(grid)

    flt_d, arr_grad, b_out = fn_distance_and_gradient(grid, (0.0, 0.0, 0.0))
    assert flt_d == pytest.approx(1.0, abs=1e-9)
    assert arr_grad == pytest.approx([-1.0, 0.0, 0.0], abs=0.1)
    assert not b_out

    flt_d, _, _ = fn_distance_and_gradient(grid, (1.0, 0.0, 0.0))
    assert flt_d == pytest.approx(0.0, abs=1e-9)


def test_distance_outside_the_map_is_clamped_and_flagged():
    grid = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    fn_set_occupied(grid, (5, 5, 5))
    fn_build_distance_field(grid)

    arr_d, arr_grad, arr_flag = fn_distance_and_gradient(grid, np.array([[0.55, 0.55, 0.55],
                                                                         [-3.0, 0.55, 0.55]]))
    assert arr_d.shape == (2,)
    assert arr_grad.shape == (2, 3)
    assert arr_flag.tolist() == [False, True]
    assert arr_d[1] == pytest.approx(0.5, abs=1e-9)
    assert arr_grad[1, 0] == 0.0


def test_interpolation_error_against_brute_force(rng):
    for _ in range(5):
        grid = fn_empty_map((0, 0, 0), (1.6, 1.6, 1.6), 0.1)
        for tpl_cell in rng.integers(0, 16, size=(6, 3)):
            fn_set_occupied(grid, tuple(tpl_cell))
        fn_build_distance_field(grid)

        arr_pts = rng.uniform(0.05, 1.55, size=(200, 3))
        arr_d, arr_grad, _ = fn_distance_and_gradient(grid, arr_pts)
        arr_truth = np.array([fn_brute_force_distance(grid, p) for p in arr_pts])
        assert np.all(np.abs(arr_d - arr_truth) <= grid.flt_resolution + 1e-9)
        # each partial is a difference quotient of a 1-Lipschitz field
        assert np.all(np.abs(arr_grad) <= 1.0 + 1e-9)


def test_gradient_is_the_derivative_of_the_interpolant(rng):
    grid = fn_empty_map((0, 0, 0), (1.6, 1.6, 1.6), 0.1)
    for tpl_cell in rng.integers(0, 16, size=(6, 3)):
        fn_set_occupied(grid, tuple(tpl_cell))
    fn_build_distance_field(grid)

    flt_h = 1e-6
    for arr_p in rng.uniform(0.1, 1.5, size=(50, 3)):
        _, arr_grad, _ = fn_distance_and_gradient(grid, arr_p)
        for i in range(3):
            arr_e = np.zeros(3)
            arr_e[i] = flt_h
            flt_fd = (fn_distance_and_gradient(grid, arr_p + arr_e)[0] -
                      fn_distance_and_gradient(grid, arr_p - arr_e)[0]) / (2 * flt_h)
            assert arr_grad[i] == pytest.approx(flt_fd, abs=1e-5)


def test_merge_maps():
    grid_a = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    grid_b = fn_empty_map((0, 0, 0), (1, 1, 1), 0.1)
    assert not fn_merge_maps(grid_a, grid_b).b_has_obstacles

    fn_set_occupied(grid_a, (1, 1, 1))
    grid_c = fn_empty_map((0.5, 0, 0), (1.5, 1, 1), 0.1)
    fn_set_occupied(grid_c, (0, 0, 0))

    grid_m = fn_merge_maps(grid_a, grid_c)
    assert grid_m.tpl_dims == (15, 10, 10)
    assert grid_m.arr_occupancy[1, 1, 1]
    assert grid_m.arr_occupancy[5, 0, 0]
    assert int(grid_m.arr_occupancy.sum()) == 2
    assert grid_m.arr_distance_field is None

    with pytest.raises(MapConfigError):
        fn_merge_maps(grid_a, fn_empty_map((0, 0, 0), (1, 1, 1), 0.2))
    with pytest.raises(MapConfigError):
        fn_merge_maps(grid_a, fn_empty_map((0.03, 0, 0), (1.03, 1, 1), 0.1))


def test_merge_is_commutative_and_idempotent(rng):
    # overlapping bounds, random occupancy on both maps
    grid_a = GridMap3D(np.array([0.0, 0.0, 0.0]), (12, 9, 5), 0.1,
                       arr_occupancy=rng.random((12, 9, 5)) < 0.2)
    grid_b = GridMap3D(np.array([0.5, -0.3, 0.2]), (10, 14, 6), 0.1,
                       arr_occupancy=rng.random((10, 14, 6)) < 0.2)

    grid_ab = fn_merge_maps(grid_a, grid_b)
    grid_ba = fn_merge_maps(grid_b, grid_a)
    assert grid_ab.tpl_dims == grid_ba.tpl_dims
    np.testing.assert_allclose(grid_ab.arr_origin, grid_ba.arr_origin)
    np.testing.assert_allclose(grid_ab.arr_upper, grid_ba.arr_upper)
    np.testing.assert_array_equal(grid_ab.arr_occupancy, grid_ba.arr_occupancy)

    grid_aa = fn_merge_maps(grid_a, grid_a)
    assert grid_aa.tpl_dims == grid_a.tpl_dims
    np.testing.assert_allclose(grid_aa.arr_origin, grid_a.arr_origin)
    np.testing.assert_array_equal(grid_aa.arr_occupancy, grid_a.arr_occupancy)


def test_random_forest_density_and_determinism():
    arr_a = fn_random_forest_pillars(7, 0.5, 0.1, (0, 0), (6, 6))
    arr_b = fn_random_forest_pillars(7, 0.5, 0.1, (0, 0), (6, 6))
    np.testing.assert_array_equal(arr_a, arr_b)
    assert 0.8 * 144 <= len(arr_a) <= 1.2 * 144

    arr_sparse = fn_random_forest_pillars(7, 1.0, 0.1, (0, 0), (6, 6))
    assert len(arr_sparse) / len(arr_a) == pytest.approx(0.25, abs=0.05)

    grid_a = fn_random_forest_map(3, 1.0, 0.2, (0, 0, 0), (6, 6, 2), 0.1)
    grid_b = fn_random_forest_map(3, 1.0, 0.2, (0, 0, 0), (6, 6, 2), 0.1)
    np.testing.assert_array_equal(grid_a.arr_occupancy, grid_b.arr_occupancy)

    with pytest.raises(MapConfigError):
        fn_random_forest_pillars(0, 0.4, 0.25, (0, 0), (6, 6))


def test_random_forest_keep_out():
    list_keep = [(1.0, 1.0, 1.0), (5.0, 5.0, 1.0)]
    grid = fn_random_forest_map(11, 0.8, 0.15, (0, 0, 0), (6, 6, 2), 0.1,
                                list_keep_out=list_keep, flt_keep_out_radius=0.6)
    fn_build_distance_field(grid)
    for arr_p in list_keep:
        assert fn_distance_and_gradient(grid, arr_p)[0] >= 0.5


def test_pillar_and_wall_with_gate():
    grid = fn_empty_map((0, 0, 0), (2, 2, 1), 0.1)
    fn_add_pillar(grid, (1.0, 1.0), 0.2)
    assert grid.arr_occupancy[10, 10, :].all()
    assert not grid.arr_occupancy[0, 0, :].any()

    grid_gate = fn_wall_with_gate_map((-2, -2, 0), (2, 2, 3), 0.1, flt_gate_width=0.8,
                                      flt_gate_height=1.5, flt_gate_bottom=0.5)
    assert not grid_gate.arr_occupancy[fn_world_to_cell(grid_gate, (0.0, 0.0, 1.25))]
    assert grid_gate.arr_occupancy[fn_world_to_cell(grid_gate, (0.05, 1.0, 1.25))]
    assert grid_gate.arr_occupancy[fn_world_to_cell(grid_gate, (0.0, 0.0, 2.5))]
    assert not grid_gate.arr_occupancy[fn_world_to_cell(grid_gate, (1.0, 1.0, 1.0))]

    assert fn_line_of_sight(grid_gate, (-1.5, 0.0, 1.25), (1.5, 0.0, 1.25))
    assert not fn_line_of_sight(grid_gate, (-1.5, 1.5, 1.25), (1.5, 1.5, 1.25))
    assert not fn_line_of_sight(grid_gate, (-1.5, 0.0, 1.25), (1.5, 0.0, 1.25), flt_clearance=0.6)

    with pytest.raises(MapConfigError):
        fn_wall_with_gate_map((-2, -2, 0), (2, 2, 3), 0.1, flt_wall_x=5.0)


def test_crop_coarsen_and_nearest_free():
    grid = fn_empty_map((0, 0, 0), (4, 4, 2), 0.1)
    fn_add_pillar(grid, (2.0, 2.0), 0.3)
    fn_build_distance_field(grid)

    grid_crop = fn_crop_map(grid, (1.0, 1.0, 0.0), (2.95, 2.95, 1.95))
    assert grid_crop.tpl_dims == (20, 20, 20)
    assert grid_crop.arr_origin == pytest.approx([1.0, 1.0, 0.0])
    np.testing.assert_array_equal(grid_crop.arr_occupancy, grid.arr_occupancy[10:30, 10:30, :])
    assert grid_crop.arr_distance_field is not None

    grid_coarse = fn_coarsen_map(grid, 0.5, 0.3)
    assert grid_coarse.tpl_dims == (8, 8, 4)
    # the coarse cells around the pillar centre are blocked, the corners free
    assert grid_coarse.arr_occupancy[3, 3, 0] and grid_coarse.arr_occupancy[4, 4, 0]
    assert not grid_coarse.arr_occupancy[0, 0, 0]

    tpl_free = fn_nearest_free_cell(grid_coarse, (3, 3, 1))
    assert not grid_coarse.arr_occupancy[tpl_free]
    assert max(abs(tpl_free[i] - (3, 3, 1)[i]) for i in range(3)) <= 2
    assert fn_nearest_free_cell(grid_coarse, (0, 0, 0)) == (0, 0, 0)

    grid_full = fn_empty_map((0, 0, 0), (0.3, 0.3, 0.3), 0.1)
    grid_full.arr_occupancy[:] = True
    with pytest.raises(MapConfigError):
        fn_nearest_free_cell(grid_full, (1, 1, 1))


def test_observe_copies_truth_within_radius():
    grid_truth = fn_empty_map((0, 0, 0), (6, 2, 2), 0.1)
    fn_add_pillar(grid_truth, (1.0, 1.0), 0.2)
    fn_add_pillar(grid_truth, (5.0, 1.0), 0.2)
    grid_known = fn_empty_map((0, 0, 0), (6, 2, 2), 0.1)

    assert fn_observe_map(grid_known, grid_truth, (1.0, 0.5, 1.0), 1.0)
    assert grid_known.arr_occupancy[10, 10, 10]
    assert not grid_known.arr_occupancy[50, 10, 10]
    # nothing new the second time
    assert not fn_observe_map(grid_known, grid_truth, (1.0, 0.5, 1.0), 1.0)

    with pytest.raises(MapConfigError):
        fn_observe_map(fn_empty_map((0, 0, 0), (5, 2, 2), 0.1), grid_truth, (1, 1, 1), 1.0)


def test_export_import_map(tmp_path):
    grid = fn_random_forest_map(5, 1.0, 0.2, (0, 0, 0), (4, 4, 2), 0.1)
    str_path = fn_export_map_json(grid, str(tmp_path / 'map.json'))
    grid_read = fn_import_map_json(str_path)
    assert grid_read.tpl_dims == grid.tpl_dims
    assert grid_read.flt_resolution == grid.flt_resolution
    np.testing.assert_array_equal(grid_read.arr_occupancy, grid.arr_occupancy)
