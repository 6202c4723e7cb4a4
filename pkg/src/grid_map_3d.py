# Bounded 3D voxel occupancy grid with a Euclidean distance field.  This
# is the environment model shared by the path search, the trajectory
# optimizer and the simulator: occupancy queries, obstacle inflation, map
# merging between agents of a group and the procedural obstacle fields
# used by the scenarios.
#
# Created by: Andy Carter, PE
# Created - 2024.03.12
# Last revised - 2024.05.14 - coarse planning grid from the distance field
#
# swarm-group-plan - environment model


# ************************************************************
from collections import deque
from dataclasses import dataclass, field
import json

import numpy as np
from scipy import ndimage

from planner_errors import MapBoundsError, MapConfigError, MapStateError
# ************************************************************


# 26 neighbour offsets of a cell
ARR_NEIGHBOUR_OFFSETS = np.array([(i, j, k)
                                  for i in (-1, 0, 1)
                                  for j in (-1, 0, 1)
                                  for k in (-1, 0, 1)
                                  if (i, j, k) != (0, 0, 0)], dtype=int)


# ------------------------------------------------------------
@dataclass(eq=False)
class GridMap3D:
    """
    Voxel occupancy over an axis aligned box.

    Args:
        arr_origin: world position (m) of the lower corner of cell (0,0,0)
        tpl_dims: number of cells along x, y and z
        flt_resolution: cell edge length (m)
        arr_occupancy: boolean volume shaped tpl_dims
        arr_distance_field: distance (m) from each cell centre to the
            nearest occupied cell centre; None until built
        flt_boundary_distance: value reported where no obstacle exists
    """

    arr_origin: np.ndarray
    tpl_dims: tuple
    flt_resolution: float
    arr_occupancy: np.ndarray = None
    arr_distance_field: np.ndarray = field(default=None, repr=False)
    flt_boundary_distance: float = 10.0

    def __post_init__(self):
        self.arr_origin = np.asarray(self.arr_origin, dtype=float).reshape(3)
        self.tpl_dims = tuple(int(v) for v in self.tpl_dims)
        self.flt_resolution = float(self.flt_resolution)

        if len(self.tpl_dims) != 3 or min(self.tpl_dims) < 1:
            raise MapConfigError('dims must be three positive integers: ' + str(self.tpl_dims))
        if self.flt_resolution <= 0:
            raise MapConfigError('resolution must be positive')

        if self.arr_occupancy is None:
            self.arr_occupancy = np.zeros(self.tpl_dims, dtype=bool)
        else:
            self.arr_occupancy = np.asarray(self.arr_occupancy, dtype=bool)
            if self.arr_occupancy.shape != self.tpl_dims:
                raise MapConfigError('occupancy shape ' + str(self.arr_occupancy.shape) +
                                     ' does not match dims ' + str(self.tpl_dims))

    @property
    def arr_upper(self):
        return self.arr_origin + np.array(self.tpl_dims) * self.flt_resolution

    @property
    def b_has_obstacles(self):
        return bool(self.arr_occupancy.any())
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_empty_map(arr_lower, arr_upper, flt_resolution, flt_boundary_distance=10.0):
    # obstacle free map covering [lower, upper]
    arr_lower = np.asarray(arr_lower, dtype=float)
    arr_upper = np.asarray(arr_upper, dtype=float)
    arr_extent = arr_upper - arr_lower

    if np.any(arr_extent <= 0):
        raise MapConfigError('upper corner must exceed lower corner')

    tpl_dims = tuple(int(v) for v in np.maximum(1, np.round(arr_extent / flt_resolution)))

    return GridMap3D(arr_lower, tpl_dims, flt_resolution,
                     flt_boundary_distance=flt_boundary_distance)
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_check_cell(grid, tpl_cell):
    tpl_cell = tuple(int(v) for v in tpl_cell)
    for int_axis in range(3):
        if tpl_cell[int_axis] < 0 or tpl_cell[int_axis] >= grid.tpl_dims[int_axis]:
            raise MapBoundsError('cell ' + str(tpl_cell) + ' outside dims ' + str(grid.tpl_dims))
    return tpl_cell
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_world_to_cell(grid, arr_point):

    """
    Index of the cell containing a world point.

    Args:
        grid: GridMap3D
        arr_point: 3-vector (m)

    Returns:
        tuple of three cell indices
    """

    arr_point = np.asarray(arr_point, dtype=float).reshape(3)
    arr_index = np.floor((arr_point - grid.arr_origin) / grid.flt_resolution).astype(int)

    if np.any(arr_index < 0) or np.any(arr_index >= np.array(grid.tpl_dims)):
        raise MapBoundsError('point ' + str(arr_point.tolist()) + ' outside map bounds')

    return tuple(int(v) for v in arr_index)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_cell_to_world(grid, tpl_cell):
    # centre of a cell
    return grid.arr_origin + (np.asarray(tpl_cell, dtype=float) + 0.5) * grid.flt_resolution
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_is_inside(grid, arr_point):
    arr_point = np.asarray(arr_point, dtype=float)
    return bool(np.all(arr_point >= grid.arr_origin) and np.all(arr_point < grid.arr_upper))
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ````````````````````````````````````````````````````````````
def fn_set_occupied(grid, tpl_cell=None, arr_point=None):
    # mark one cell, given by index or by a world point inside it
    if tpl_cell is None:
        tpl_cell = fn_world_to_cell(grid, arr_point)
    tpl_cell = fn_check_cell(grid, tpl_cell)

    grid.arr_occupancy[tpl_cell] = True
    grid.arr_distance_field = None
    return grid
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_is_occupied(grid, tpl_cell):
    tpl_cell = fn_check_cell(grid, tpl_cell)
    return bool(grid.arr_occupancy[tpl_cell])
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_inflate_map(grid, flt_radius):

    """
    Dilate the occupancy by a sphere.  Every cell whose centre lies within
    flt_radius of an occupied cell centre becomes occupied.

    Args:
        grid: GridMap3D
        flt_radius: inflation radius (m)

    Returns:
        new GridMap3D with the inflated occupancy and no distance field
    """

    flt_r_cells = flt_radius / grid.flt_resolution
    int_r = int(np.floor(flt_r_cells + 1e-9))

    arr_occ = grid.arr_occupancy.copy()

    if int_r >= 1 and arr_occ.any():
        arr_range = np.arange(-int_r, int_r + 1)
        arr_i, arr_j, arr_k = np.meshgrid(arr_range, arr_range, arr_range, indexing='ij')
        arr_structure = (arr_i ** 2 + arr_j ** 2 + arr_k ** 2) <= flt_r_cells ** 2 + 1e-9
        arr_occ = ndimage.binary_dilation(arr_occ, structure=arr_structure)

    return GridMap3D(grid.arr_origin.copy(), grid.tpl_dims, grid.flt_resolution,
                     arr_occupancy=arr_occ,
                     flt_boundary_distance=grid.flt_boundary_distance)
# ````````````````````````````````````````````````````````````


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_build_distance_field(grid):

    """
    Exact Euclidean distance transform of the free space, in meters,
    clipped at the boundary sentinel.

    Args:
        grid: GridMap3D (modified in place)

    Returns:
        grid
    """

    if not grid.b_has_obstacles:
        grid.arr_distance_field = np.full(grid.tpl_dims, grid.flt_boundary_distance, dtype=float)
        return grid

    # distance from each free cell centre to the nearest occupied centre
    arr_edt = ndimage.distance_transform_edt(~grid.arr_occupancy,
                                             sampling=grid.flt_resolution)

    grid.arr_distance_field = np.minimum(arr_edt, grid.flt_boundary_distance)
    return grid
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_distance_and_gradient(grid, arr_points):

    """
    Trilinear interpolation of the distance field between cell centres and
    the derivative of that interpolant.  Points outside the map are clamped
    to the boundary and flagged.

    Args:
        grid: GridMap3D with a built distance field
        arr_points: one 3-vector or an (N,3) array (m)

    Returns:
        distance (m), gradient (unitless) and out-of-bounds flag; scalars
        and a 3-vector for a single point, (N,), (N,3), (N,) otherwise
    """

    if grid.arr_distance_field is None:
        raise MapStateError('distance field not built; call fn_build_distance_field first')

    arr_points = np.asarray(arr_points, dtype=float)
    b_single = arr_points.ndim == 1
    arr_p = arr_points.reshape(-1, 3)

    arr_dims = np.array(grid.tpl_dims)
    arr_flag = np.any(arr_p < grid.arr_origin, axis=1) | np.any(arr_p > grid.arr_upper, axis=1)

    # continuous index with integer values at cell centres
    arr_u = (arr_p - grid.arr_origin) / grid.flt_resolution - 0.5
    arr_u_clamped = np.clip(arr_u, 0.0, arr_dims - 1)
    arr_free_axis = (arr_u == arr_u_clamped).astype(float)

    arr_i0 = np.clip(np.floor(arr_u_clamped).astype(int), 0, np.maximum(arr_dims - 2, 0))
    arr_f = np.clip(arr_u_clamped - arr_i0, 0.0, 1.0)
    arr_i1 = np.minimum(arr_i0 + 1, arr_dims - 1)

    arr_field = grid.arr_distance_field

    def fn_corner(int_x, int_y, int_z):
        arr_ix = arr_i1[:, 0] if int_x else arr_i0[:, 0]
        arr_iy = arr_i1[:, 1] if int_y else arr_i0[:, 1]
        arr_iz = arr_i1[:, 2] if int_z else arr_i0[:, 2]
        return arr_field[arr_ix, arr_iy, arr_iz]

    c000 = fn_corner(0, 0, 0)
    c100 = fn_corner(1, 0, 0)
    c010 = fn_corner(0, 1, 0)
    c110 = fn_corner(1, 1, 0)
    c001 = fn_corner(0, 0, 1)
    c101 = fn_corner(1, 0, 1)
    c011 = fn_corner(0, 1, 1)
    c111 = fn_corner(1, 1, 1)

    fx = arr_f[:, 0]
    fy = arr_f[:, 1]
    fz = arr_f[:, 2]
    gx = 1.0 - fx
    gy = 1.0 - fy
    gz = 1.0 - fz

    arr_dist = (gx * gy * gz * c000 + fx * gy * gz * c100 +
                gx * fy * gz * c010 + fx * fy * gz * c110 +
                gx * gy * fz * c001 + fx * gy * fz * c101 +
                gx * fy * fz * c011 + fx * fy * fz * c111)

    arr_dfx = (gy * gz * (c100 - c000) + fy * gz * (c110 - c010) +
               gy * fz * (c101 - c001) + fy * fz * (c111 - c011))
    arr_dfy = (gx * gz * (c010 - c000) + fx * gz * (c110 - c100) +
               gx * fz * (c011 - c001) + fx * fz * (c111 - c101))
    arr_dfz = (gx * gy * (c001 - c000) + fx * gy * (c101 - c100) +
               gx * fy * (c011 - c010) + fx * fy * (c111 - c110))

    arr_grad = np.stack([arr_dfx, arr_dfy, arr_dfz], axis=1) / grid.flt_resolution

    # single cell thick axes and clamped coordinates carry no slope
    arr_grad = arr_grad * arr_free_axis * (arr_dims > 1)

    if b_single:
        return float(arr_dist[0]), arr_grad[0], bool(arr_flag[0])
    return arr_dist, arr_grad, arr_flag
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,
def fn_merge_maps(grid_a, grid_b):

    """
    Union of two maps of the same resolution over the union of their
    bounds.  Origins must lie on a common cell lattice.

    Args:
        grid_a: GridMap3D
        grid_b: GridMap3D

    Returns:
        merged GridMap3D (distance field rebuilt on demand)
    """

    if not np.isclose(grid_a.flt_resolution, grid_b.flt_resolution):
        raise MapConfigError('cannot merge maps of resolution ' + str(grid_a.flt_resolution) +
                             ' and ' + str(grid_b.flt_resolution))

    flt_res = grid_a.flt_resolution
    arr_shift = (grid_b.arr_origin - grid_a.arr_origin) / flt_res
    if not np.allclose(arr_shift, np.round(arr_shift), atol=1e-6):
        raise MapConfigError('map origins are not aligned on a common cell lattice')

    arr_lower = np.minimum(grid_a.arr_origin, grid_b.arr_origin)
    arr_upper = np.maximum(grid_a.arr_upper, grid_b.arr_upper)
    tpl_dims = tuple(int(v) for v in np.round((arr_upper - arr_lower) / flt_res))

    arr_occ = np.zeros(tpl_dims, dtype=bool)
    for grid in (grid_a, grid_b):
        arr_off = np.round((grid.arr_origin - arr_lower) / flt_res).astype(int)
        tpl_slice = tuple(slice(arr_off[i], arr_off[i] + grid.tpl_dims[i]) for i in range(3))
        arr_occ[tpl_slice] |= grid.arr_occupancy

    return GridMap3D(arr_lower, tpl_dims, flt_res, arr_occupancy=arr_occ,
                     flt_boundary_distance=grid_a.flt_boundary_distance)
# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,


# ````````````````````````````````````````````````````````````
def fn_add_pillar(grid, arr_center_xy, flt_radius):
    # full height vertical cylinder; always marks the cell under its centre
    flt_res = grid.flt_resolution
    arr_center_xy = np.asarray(arr_center_xy, dtype=float)

    arr_lo = np.floor((arr_center_xy - flt_radius - grid.arr_origin[:2]) / flt_res).astype(int)
    arr_hi = np.floor((arr_center_xy + flt_radius - grid.arr_origin[:2]) / flt_res).astype(int) + 1
    arr_lo = np.clip(arr_lo, 0, np.array(grid.tpl_dims[:2]))
    arr_hi = np.clip(arr_hi, 0, np.array(grid.tpl_dims[:2]))

    if np.any(arr_hi <= arr_lo):
        return grid

    arr_x = grid.arr_origin[0] + (np.arange(arr_lo[0], arr_hi[0]) + 0.5) * flt_res
    arr_y = grid.arr_origin[1] + (np.arange(arr_lo[1], arr_hi[1]) + 0.5) * flt_res
    arr_xx, arr_yy = np.meshgrid(arr_x, arr_y, indexing='ij')
    arr_mask = (arr_xx - arr_center_xy[0]) ** 2 + (arr_yy - arr_center_xy[1]) ** 2 <= flt_radius ** 2

    grid.arr_occupancy[arr_lo[0]:arr_hi[0], arr_lo[1]:arr_hi[1], :] |= arr_mask[:, :, None]

    arr_idx = np.floor((arr_center_xy - grid.arr_origin[:2]) / flt_res).astype(int)
    if np.all(arr_idx >= 0) and np.all(arr_idx < np.array(grid.tpl_dims[:2])):
        grid.arr_occupancy[arr_idx[0], arr_idx[1], :] = True

    grid.arr_distance_field = None
    return grid
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_random_forest_pillars(int_seed, flt_avg_spacing, flt_pillar_radius,
                             arr_lower_xy, arr_upper_xy,
                             list_keep_out=None, flt_keep_out_radius=0.0):

    """
    Pillar centres on a jittered lattice of pitch flt_avg_spacing, so the
    count is close to area / spacing^2 and the mean nearest neighbour
    spacing close to flt_avg_spacing.

    Args:
        int_seed: random seed
        flt_avg_spacing: lattice pitch (m)
        flt_pillar_radius: pillar radius (m)
        arr_lower_xy: lower corner of the forest (m)
        arr_upper_xy: upper corner of the forest (m)
        list_keep_out: points whose surroundings stay free
        flt_keep_out_radius: free radius around each keep-out point (m)

    Returns:
        arr_centers: (P,2) pillar centres
    """

    if flt_avg_spacing <= 2.0 * flt_pillar_radius:
        raise MapConfigError('average spacing must exceed the pillar diameter')

    rng = np.random.default_rng(int_seed)

    arr_lower_xy = np.asarray(arr_lower_xy, dtype=float)
    arr_upper_xy = np.asarray(arr_upper_xy, dtype=float)
    arr_extent = arr_upper_xy - arr_lower_xy

    int_nx = max(1, int(round(arr_extent[0] / flt_avg_spacing)))
    int_ny = max(1, int(round(arr_extent[1] / flt_avg_spacing)))
    flt_pitch_x = arr_extent[0] / int_nx
    flt_pitch_y = arr_extent[1] / int_ny

    arr_ix, arr_iy = np.meshgrid(np.arange(int_nx), np.arange(int_ny), indexing='ij')
    arr_base = np.stack([arr_lower_xy[0] + (arr_ix.ravel() + 0.5) * flt_pitch_x,
                         arr_lower_xy[1] + (arr_iy.ravel() + 0.5) * flt_pitch_y], axis=1)

    # jitter keeps neighbouring pillars from touching
    flt_jitter = max(0.0, 0.5 * flt_avg_spacing - flt_pillar_radius)
    arr_centers = arr_base + rng.uniform(-flt_jitter, flt_jitter, size=arr_base.shape)

    if list_keep_out:
        arr_keep = np.asarray(list_keep_out, dtype=float)[:, :2]
        arr_d = np.linalg.norm(arr_centers[:, None, :] - arr_keep[None, :, :], axis=2)
        arr_centers = arr_centers[np.all(arr_d > flt_keep_out_radius + flt_pillar_radius, axis=1)]

    return arr_centers
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_random_forest_map(int_seed, flt_avg_spacing, flt_pillar_radius,
                         arr_lower=(0.0, 0.0, 0.0), arr_upper=(6.0, 6.0, 3.0),
                         flt_resolution=0.1, list_keep_out=None,
                         flt_keep_out_radius=0.0, flt_boundary_distance=10.0):
    # deterministic field of full height pillars for a seed
    grid = fn_empty_map(arr_lower, arr_upper, flt_resolution, flt_boundary_distance)

    arr_centers = fn_random_forest_pillars(int_seed, flt_avg_spacing, flt_pillar_radius,
                                           grid.arr_origin[:2], grid.arr_upper[:2],
                                           list_keep_out, flt_keep_out_radius)
    for arr_c in arr_centers:
        fn_add_pillar(grid, arr_c, flt_pillar_radius)

    return grid
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_wall_with_gate_map(arr_lower=(-6.0, -4.0, 0.0), arr_upper=(6.0, 4.0, 3.0),
                          flt_resolution=0.1, flt_wall_x=0.0, flt_thickness=0.2,
                          flt_gate_width=0.8, flt_gate_height=1.5,
                          flt_gate_center_y=0.0, flt_gate_bottom=0.5,
                          flt_boundary_distance=10.0):
    # full width wall across x = flt_wall_x with one rectangular opening
    grid = fn_empty_map(arr_lower, arr_upper, flt_resolution, flt_boundary_distance)

    arr_centers = [grid.arr_origin[i] + (np.arange(grid.tpl_dims[i]) + 0.5) * flt_resolution
                   for i in range(3)]
    arr_in_wall = np.abs(arr_centers[0] - flt_wall_x) <= 0.5 * flt_thickness
    arr_in_gap_y = np.abs(arr_centers[1] - flt_gate_center_y) <= 0.5 * flt_gate_width
    arr_in_gap_z = ((arr_centers[2] >= flt_gate_bottom) &
                    (arr_centers[2] <= flt_gate_bottom + flt_gate_height))

    if not arr_in_wall.any():
        raise MapConfigError('wall does not intersect the map')

    arr_gap = arr_in_gap_y[:, None] & arr_in_gap_z[None, :]
    grid.arr_occupancy[arr_in_wall, :, :] = ~arr_gap[None, :, :]
    return grid
# ````````````````````````````````````````````````````````````


# ------------------------------------------------------------
def fn_line_of_sight(grid, arr_a, arr_b, flt_clearance=0.0):

    """
    True when the segment a-b stays in free space.  With a positive
    clearance the distance field (built on demand) must stay at or above
    it along the segment; otherwise occupancy is tested.  Leaving the map
    counts as blocked.
    """

    arr_a = np.asarray(arr_a, dtype=float)
    arr_b = np.asarray(arr_b, dtype=float)

    flt_len = float(np.linalg.norm(arr_b - arr_a))
    int_n = max(2, int(np.ceil(flt_len / (0.5 * grid.flt_resolution))) + 1)
    arr_s = np.linspace(0.0, 1.0, int_n)[:, None]
    arr_pts = arr_a[None, :] + arr_s * (arr_b - arr_a)[None, :]

    if flt_clearance > 0.0:
        if grid.arr_distance_field is None:
            fn_build_distance_field(grid)
        arr_d, _, arr_flag = fn_distance_and_gradient(grid, arr_pts)
        return bool(not arr_flag.any() and np.all(arr_d >= flt_clearance))

    arr_idx = np.floor((arr_pts - grid.arr_origin) / grid.flt_resolution).astype(int)
    if np.any(arr_idx < 0) or np.any(arr_idx >= np.array(grid.tpl_dims)):
        return False

    return not bool(grid.arr_occupancy[arr_idx[:, 0], arr_idx[:, 1], arr_idx[:, 2]].any())
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_crop_map(grid, arr_lower, arr_upper):
    # sub-map on the same cell lattice, clipped to the parent bounds
    flt_res = grid.flt_resolution
    arr_lo = np.floor((np.asarray(arr_lower, dtype=float) - grid.arr_origin) / flt_res).astype(int)
    arr_hi = np.ceil((np.asarray(arr_upper, dtype=float) - grid.arr_origin) / flt_res).astype(int)
    arr_lo = np.clip(arr_lo, 0, np.array(grid.tpl_dims) - 1)
    arr_hi = np.clip(arr_hi, arr_lo + 1, np.array(grid.tpl_dims))

    tpl_slice = tuple(slice(arr_lo[i], arr_hi[i]) for i in range(3))
    grid_crop = GridMap3D(grid.arr_origin + arr_lo * flt_res,
                          tuple(arr_hi - arr_lo), flt_res,
                          arr_occupancy=grid.arr_occupancy[tpl_slice].copy(),
                          flt_boundary_distance=grid.flt_boundary_distance)

    if grid.arr_distance_field is not None:
        grid_crop.arr_distance_field = grid.arr_distance_field[tpl_slice].copy()

    return grid_crop
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_coarsen_map(grid, flt_resolution, flt_clearance):

    """
    Planning grid at a coarser resolution.  A coarse cell is occupied when
    the fine distance field at its centre is below flt_clearance.

    Args:
        grid: fine GridMap3D
        flt_resolution: coarse cell size (m)
        flt_clearance: required distance to obstacles (m)

    Returns:
        coarse GridMap3D with the same origin
    """

    if grid.arr_distance_field is None:
        fn_build_distance_field(grid)

    arr_extent = grid.arr_upper - grid.arr_origin
    tpl_dims = tuple(int(v) for v in np.maximum(1, np.floor(arr_extent / flt_resolution + 1e-9)))

    grid_coarse = GridMap3D(grid.arr_origin.copy(), tpl_dims, flt_resolution,
                            flt_boundary_distance=grid.flt_boundary_distance)

    if not grid.b_has_obstacles:
        return grid_coarse

    arr_axes = [grid.arr_origin[i] + (np.arange(tpl_dims[i]) + 0.5) * flt_resolution
                for i in range(3)]
    arr_xx, arr_yy, arr_zz = np.meshgrid(*arr_axes, indexing='ij')
    arr_pts = np.stack([arr_xx.ravel(), arr_yy.ravel(), arr_zz.ravel()], axis=1)

    arr_d, _, _ = fn_distance_and_gradient(grid, arr_pts)
    grid_coarse.arr_occupancy = (arr_d < flt_clearance).reshape(tpl_dims)
    return grid_coarse
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_nearest_free_cell(grid, tpl_cell):
    # breadth first over 26-neighbours; the cell itself when already free
    tpl_cell = fn_check_cell(grid, tpl_cell)
    if not grid.arr_occupancy[tpl_cell]:
        return tpl_cell

    arr_dims = np.array(grid.tpl_dims)
    set_seen = {tpl_cell}
    queue = deque([tpl_cell])

    while queue:
        tpl_current = queue.popleft()
        for arr_off in ARR_NEIGHBOUR_OFFSETS:
            arr_next = np.array(tpl_current) + arr_off
            if np.any(arr_next < 0) or np.any(arr_next >= arr_dims):
                continue
            tpl_next = tuple(int(v) for v in arr_next)
            if tpl_next in set_seen:
                continue
            if not grid.arr_occupancy[tpl_next]:
                return tpl_next
            set_seen.add(tpl_next)
            queue.append(tpl_next)

    raise MapConfigError('map has no free cell')
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_observe_map(grid_known, grid_truth, arr_center, flt_radius):

    """
    Copy the true occupancy within a sensing sphere into a known map of the
    same geometry.

    Returns:
        True when the known map gained an occupied cell
    """

    if grid_known.tpl_dims != grid_truth.tpl_dims or \
            not np.allclose(grid_known.arr_origin, grid_truth.arr_origin):
        raise MapConfigError('known and true maps must share their geometry')

    flt_res = grid_truth.flt_resolution
    arr_center = np.asarray(arr_center, dtype=float)
    arr_lo = np.floor((arr_center - flt_radius - grid_truth.arr_origin) / flt_res).astype(int)
    arr_hi = np.floor((arr_center + flt_radius - grid_truth.arr_origin) / flt_res).astype(int) + 1
    arr_lo = np.clip(arr_lo, 0, np.array(grid_truth.tpl_dims))
    arr_hi = np.clip(arr_hi, 0, np.array(grid_truth.tpl_dims))

    if np.any(arr_hi <= arr_lo):
        return False

    tpl_slice = tuple(slice(arr_lo[i], arr_hi[i]) for i in range(3))
    arr_truth = grid_truth.arr_occupancy[tpl_slice]
    if not arr_truth.any():
        return False

    arr_axes = [grid_truth.arr_origin[i] + (np.arange(arr_lo[i], arr_hi[i]) + 0.5) * flt_res
                for i in range(3)]
    arr_xx, arr_yy, arr_zz = np.meshgrid(*arr_axes, indexing='ij')
    arr_in_range = ((arr_xx - arr_center[0]) ** 2 + (arr_yy - arr_center[1]) ** 2 +
                    (arr_zz - arr_center[2]) ** 2) <= flt_radius ** 2

    arr_new = arr_truth & arr_in_range & ~grid_known.arr_occupancy[tpl_slice]
    if not arr_new.any():
        return False

    grid_known.arr_occupancy[tpl_slice] |= arr_new
    grid_known.arr_distance_field = None
    return True
# ------------------------------------------------------------


# ............................................................
def fn_export_map_json(grid, str_json_path):
    # voxel list: origin, resolution, dims and occupied cell indices
    dict_map = {'list_origin': grid.arr_origin.tolist(),
                'flt_resolution': grid.flt_resolution,
                'list_dims': list(grid.tpl_dims),
                'flt_boundary_distance': grid.flt_boundary_distance,
                'list_occupied': np.argwhere(grid.arr_occupancy).tolist()}

    with open(str_json_path, 'w') as f:
        json.dump(dict_map, f)

    return str_json_path


def fn_import_map_json(str_json_path):
    with open(str_json_path) as f:
        dict_map = json.load(f)

    grid = GridMap3D(dict_map['list_origin'], tuple(dict_map['list_dims']),
                     dict_map['flt_resolution'],
                     flt_boundary_distance=dict_map.get('flt_boundary_distance', 10.0))

    arr_occupied = np.asarray(dict_map['list_occupied'], dtype=int).reshape(-1, 3)
    if len(arr_occupied) > 0:
        if np.any(arr_occupied < 0) or np.any(arr_occupied >= np.array(grid.tpl_dims)):
            raise MapConfigError('occupied index outside dims in ' + str_json_path)
        grid.arr_occupancy[arr_occupied[:, 0], arr_occupied[:, 1], arr_occupied[:, 2]] = True

    return grid
# ............................................................
