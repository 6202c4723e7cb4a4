# Objective terms of the group trajectory optimization: control effort,
# execution time, dynamic feasibility, obstacle avoidance, reciprocal
# avoidance between agents and uniform spacing of the constraint points.
# Every term returns its value and its partials with respect to the
# polynomial coefficients and piece durations of each affected agent.
#
# Created by: Andy Carter, PE
# Created - 2024.04.02
# Last revised - 2024.05.21 - fixed neighbour trajectories in the
#                             reciprocal term
#
# swarm-group-plan - penalty terms


# ************************************************************
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from grid_map_3d import fn_distance_and_gradient
from minco_trajectory import fn_beta, fn_evaluate_pieces, fn_locate_pieces
from planner_errors import ContractError
# ************************************************************


# index of each term in the lambda weight vector
INT_EFFORT = 0
INT_TIME = 1
INT_FEASIBILITY = 2
INT_OBSTACLE = 3
INT_RECIPROCAL = 4
INT_UNIFORMITY = 5
LIST_TERM_NAMES = ['effort', 'time', 'feasibility', 'obstacle', 'reciprocal', 'uniformity']

# index of each constraint in the chi vector
INT_CHI_V = 0
INT_CHI_A = 1
INT_CHI_J = 2
INT_CHI_O = 3
INT_CHI_W = 4


# ------------------------------------------------------------
@dataclass
class PenaltyWeights:
    """
    Term weights (lambda), per constraint penalty weights (chi: velocity,
    acceleration, jerk, obstacle, swarm), samples per piece, clearances,
    dynamic limits and the downwash metric E.
    """

    arr_lambda: np.ndarray = field(default_factory=lambda: np.array([1.0, 20.0, 1.0e4, 1.0e4, 1.0e4, 1.0e2]))
    arr_chi: np.ndarray = field(default_factory=lambda: np.ones(5))
    int_kappa: int = 16
    flt_clearance_obstacle: float = 0.3
    flt_clearance_swarm: float = 0.5
    flt_v_max: float = 1.7
    flt_a_max: float = 6.2
    flt_j_max: float = 20.0
    arr_downwash: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 0.25]))

    def __post_init__(self):
        self.arr_lambda = np.asarray(self.arr_lambda, dtype=float).reshape(6)
        self.arr_chi = np.asarray(self.arr_chi, dtype=float).reshape(5)
        self.arr_downwash = np.asarray(self.arr_downwash, dtype=float).reshape(3, 3)
        self.int_kappa = int(self.int_kappa)

        if np.any(self.arr_lambda < 0) or np.any(self.arr_chi < 0):
            raise ContractError('penalty weights must be non-negative')
        if self.int_kappa < 2:
            raise ContractError('kappa must be at least 2')
        if self.flt_clearance_obstacle <= 0 or self.flt_clearance_swarm <= 0:
            raise ContractError('clearances must be positive')
        if min(self.flt_v_max, self.flt_a_max, self.flt_j_max) <= 0:
            raise ContractError('dynamic limits must be positive')
        if not np.allclose(self.arr_downwash, self.arr_downwash.T):
            raise ContractError('downwash matrix must be symmetric')
        try:
            np.linalg.cholesky(self.arr_downwash)
        except np.linalg.LinAlgError:
            raise ContractError('downwash matrix must be positive definite')
# ------------------------------------------------------------


# ------------------------------------------------------------
def fn_weights_from_config(dict_penalty):
    # PenaltyWeights from the [penalty] section of the typed config
    return PenaltyWeights(arr_lambda=dict_penalty['list_flt_lambda'],
                          arr_chi=dict_penalty['list_flt_chi'],
                          int_kappa=dict_penalty['int_kappa'],
                          flt_clearance_obstacle=dict_penalty['flt_clearance_obstacle'],
                          flt_clearance_swarm=dict_penalty['flt_clearance_swarm'],
                          flt_v_max=dict_penalty['flt_v_max'],
                          flt_a_max=dict_penalty['flt_a_max'],
                          flt_j_max=dict_penalty['flt_j_max'],
                          arr_downwash=np.diag(dict_penalty['list_flt_downwash']))
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
@dataclass
class ConstraintPointSet:
    """
    Samples p_i((j/kappa) T_i), j = 0..kappa, of every piece, piece major.
    list_beta[d] and list_deriv[d] hold the basis and the trajectory
    derivative of order d at each sample.
    """

    arr_piece: np.ndarray
    arr_j: np.ndarray
    arr_frac: np.ndarray
    arr_t_local: np.ndarray
    arr_t_global: np.ndarray
    arr_trapezoid: np.ndarray
    arr_scale: np.ndarray
    list_beta: list
    list_deriv: list


def fn_constraint_points(traj, int_kappa, int_max_order=4):
    int_m = traj.int_pieces
    int_n = traj.int_n_coef

    arr_piece = np.repeat(np.arange(int_m), int_kappa + 1)
    arr_j = np.tile(np.arange(int_kappa + 1), int_m)
    arr_frac = arr_j / float(int_kappa)
    arr_t_local = arr_frac * traj.arr_T[arr_piece]
    arr_t_global = traj.arr_piece_start[arr_piece] + arr_t_local

    # trapezoidal weights: half at both ends of a piece
    arr_trapezoid = np.where((arr_j == 0) | (arr_j == int_kappa), 0.5, 1.0)
    arr_scale = traj.arr_T[arr_piece] / int_kappa * arr_trapezoid

    arr_blocks = traj.arr_c.reshape(int_m, int_n, 3)[arr_piece]
    list_beta = []
    list_deriv = []
    for d in range(int_max_order + 1):
        arr_beta = fn_beta(arr_t_local, d, int_n)
        list_beta.append(arr_beta)
        list_deriv.append(np.einsum('pk,pkm->pm', arr_beta, arr_blocks))

    return ConstraintPointSet(arr_piece, arr_j, arr_frac, arr_t_local, arr_t_global,
                              arr_trapezoid, arr_scale, list_beta, list_deriv)
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_sum_after(arr_b):
    # out[l] = sum of arr_b[i] for i > l
    if arr_b.size == 0:
        return arr_b.copy()
    return np.concatenate([np.cumsum(arr_b[::-1])[::-1][1:], [0.0]])


def fn_pull_to_coefficients(arr_dj_dc_blocks, arr_piece, arr_beta, arr_dj_dp):
    # dJ/dc_i += beta(t) (dJ/dp)^T for every sample of piece i
    np.add.at(arr_dj_dc_blocks, arr_piece, arr_beta[:, :, None] * arr_dj_dp[:, None, :])
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_integral_penalty(traj, fn_constraint, arr_chi, int_kappa, cps=None):

    """
    Quadrature of the cubic constraint violation over every piece,

        J = sum_i (T_i / kappa) sum_j w_j chi . max(G(p_ij), 0)^3

    with trapezoidal w_j.

    Args:
        traj: MincoTrajectory
        fn_constraint: callable(cps) -> (arr_g (P, n_g),
            {order d: dG/dp^(d) as (P, n_g, 3)})
        arr_chi: (n_g,) penalty weights
        int_kappa: samples per piece
        cps: precomputed ConstraintPointSet

    Returns:
        (J, dJ/dc (2sM, 3), dJ/dT (M,))
    """

    int_m = traj.int_pieces
    int_n = traj.int_n_coef
    if cps is None:
        cps = fn_constraint_points(traj, int_kappa)

    arr_g, dict_dg_dp = fn_constraint(cps)
    arr_chi = np.atleast_1d(np.asarray(arr_chi, dtype=float))
    arr_viol = np.maximum(arr_g, 0.0)

    arr_point_cost = cps.arr_scale * ((arr_viol ** 3) @ arr_chi)
    flt_j = float(np.sum(arr_point_cost))

    arr_dj_dc = np.zeros((int_m, int_n, 3))
    arr_dj_dT = np.zeros(int_m)
    if flt_j == 0.0:
        return 0.0, arr_dj_dc.reshape(int_m * int_n, 3), arr_dj_dT

    arr_dj_dg = 3.0 * arr_viol ** 2 * arr_chi[None, :] * cps.arr_scale[:, None]

    arr_dj_dt = np.zeros(arr_g.shape[0])
    for d, arr_dg in dict_dg_dp.items():
        arr_vec = np.einsum('pg,pgm->pm', arr_dj_dg, arr_dg)
        fn_pull_to_coefficients(arr_dj_dc, cps.arr_piece, cps.list_beta[d], arr_vec)
        arr_dj_dt += np.sum(arr_vec * cps.list_deriv[d + 1], axis=1)

    arr_j_piece = np.bincount(cps.arr_piece, weights=arr_point_cost, minlength=int_m)
    arr_dj_dT += arr_j_piece / traj.arr_T
    arr_dj_dT += np.bincount(cps.arr_piece, weights=arr_dj_dt * cps.arr_frac, minlength=int_m)

    return flt_j, arr_dj_dc.reshape(int_m * int_n, 3), arr_dj_dT
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ````````````````````````````````````````````````````````````
def fn_effort_gram(flt_T, int_s):
    # Gram matrix of the s-th derivative basis over [0, T]
    int_n = 2 * int_s
    arr_q = np.zeros((int_n, int_n))
    for k in range(int_s, int_n):
        flt_ak = factorial(k) / factorial(k - int_s)
        for l in range(int_s, int_n):
            flt_al = factorial(l) / factorial(l - int_s)
            int_pow = k + l - 2 * int_s + 1
            arr_q[k, l] = flt_ak * flt_al * flt_T ** int_pow / int_pow
    return arr_q


def fn_control_effort(traj):

    """
    Closed form of sum_i integral ||p_i^(s)(t)||^2 dt over [0, T_i].

    Returns:
        (Je, dJe/dc, dJe/dT)
    """

    int_m = traj.int_pieces
    int_n = traj.int_n_coef
    int_s = traj.int_s

    flt_j = 0.0
    arr_dj_dc = np.zeros((int_m * int_n, 3))
    arr_dj_dT = np.zeros(int_m)

    for i in range(int_m):
        arr_block = traj.fn_block(i)
        arr_gram = fn_effort_gram(traj.arr_T[i], int_s)
        arr_qc = arr_gram @ arr_block
        flt_j += float(np.sum(arr_block * arr_qc))
        arr_dj_dc[int_n * i:int_n * (i + 1)] = 2.0 * arr_qc

        arr_top = fn_beta(traj.arr_T[i], int_s, int_n) @ arr_block
        arr_dj_dT[i] = float(arr_top @ arr_top)

    return flt_j, arr_dj_dc, arr_dj_dT
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_time_cost(arr_T):
    arr_T = np.asarray(arr_T, dtype=float)
    return float(np.sum(arr_T)), np.ones_like(arr_T)
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_feasibility_penalty(traj, weights, cps=None):

    """
    Velocity, acceleration and jerk magnitude limits,
    G = ||p^(d)||^2 - limit^2 for d = 1, 2, 3.
    """

    arr_limits = np.array([weights.flt_v_max, weights.flt_a_max, weights.flt_j_max])

    def fn_dynamic_constraint(cps):
        int_p = cps.arr_piece.size
        arr_g = np.zeros((int_p, 3))
        dict_dg = {}
        for int_col, d in enumerate((1, 2, 3)):
            arr_d = cps.list_deriv[d]
            arr_g[:, int_col] = np.sum(arr_d * arr_d, axis=1) - arr_limits[int_col] ** 2
            arr_dg = np.zeros((int_p, 3, 3))
            arr_dg[:, int_col, :] = 2.0 * arr_d
            dict_dg[d] = arr_dg
        return arr_g, dict_dg

    arr_chi = weights.arr_chi[[INT_CHI_V, INT_CHI_A, INT_CHI_J]]
    return fn_integral_penalty(traj, fn_dynamic_constraint, arr_chi, weights.int_kappa, cps)
# ````````````````````````````````````````````````````````````


# ````````````````````````````````````````````````````````````
def fn_obstacle_penalty(traj, grid, weights, cps=None):

    """
    G = C_o - d(p) with d the interpolated distance field; dG/dp = -v with
    v the field gradient.  Zero on maps without obstacles.
    """

    if grid is None or not grid.b_has_obstacles:
        int_dim = traj.int_pieces * traj.int_n_coef
        return 0.0, np.zeros((int_dim, 3)), np.zeros(traj.int_pieces)

    def fn_obstacle_constraint(cps):
        arr_d, arr_v, _ = fn_distance_and_gradient(grid, cps.list_deriv[0])
        arr_g = (weights.flt_clearance_obstacle - arr_d)[:, None]
        return arr_g, {0: -arr_v[:, None, :]}

    return fn_integral_penalty(traj, fn_obstacle_constraint,
                               weights.arr_chi[[INT_CHI_O]], weights.int_kappa, cps)
# ````````````````````````````````````````````````````````````


# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,
def fn_reciprocal_penalty(list_trajs, int_u, weights, list_fixed=None, cps=None):

    """
    Reciprocal avoidance seen from agent u.  At every constraint point of u
    (global stamp tau) each other agent k is located at the same stamp and

        G = C_w^2 - (p_u - p_k)^T E (p_u - p_k).

    Gradients reach both agents' coefficients and durations: u's own local
    time moves with T_ui (factor j/kappa), the stamp moves with every T_ul
    for l <= i, and k's local time moves with -T_km for m < n.  An agent
    whose trajectory has ended is held at its final position and receives
    no gradient.

    Args:
        list_trajs: MincoTrajectory of every agent in the group, common start
        int_u: index of the agent whose constraint points are used
        weights: PenaltyWeights
        list_fixed: (trajectory, time offset) of neighbours outside the
            group; they are evaluated at tau + offset and get no gradient
        cps: precomputed ConstraintPointSet of agent u

    Returns:
        (Jw, list of dJ/dc per agent, list of dJ/dT per agent)
    """

    int_k = len(list_trajs)
    if int_k < 1 or int_u < 0 or int_u >= int_k:
        raise ContractError('agent index ' + str(int_u) + ' outside the group of ' + str(int_k))

    list_dj_dc = [np.zeros((t.int_pieces, t.int_n_coef, 3)) for t in list_trajs]
    list_dj_dT = [np.zeros(t.int_pieces) for t in list_trajs]

    list_neighbours = [(k, list_trajs[k], 0.0) for k in range(int_k) if k != int_u]
    for traj_fixed, flt_offset in (list_fixed or []):
        list_neighbours.append((None, traj_fixed, float(flt_offset)))

    traj_u = list_trajs[int_u]
    flt_j = 0.0

    if list_neighbours:
        if cps is None:
            cps = fn_constraint_points(traj_u, weights.int_kappa, int_max_order=1)

        int_m_u = traj_u.int_pieces
        arr_e = weights.arr_downwash
        flt_cw2 = weights.flt_clearance_swarm ** 2
        flt_chi = weights.arr_chi[INT_CHI_W]
        arr_pu = cps.list_deriv[0]
        arr_vu = cps.list_deriv[1]
        arr_j_piece = np.zeros(int_m_u)

        for int_nb, traj_k, flt_offset in list_neighbours:
            arr_tk = cps.arr_t_global + flt_offset
            arr_piece_k, arr_local_k, arr_held = fn_locate_pieces(traj_k, arr_tk)
            arr_pk = fn_evaluate_pieces(traj_k, arr_piece_k, arr_local_k, 0)

            arr_delta = arr_pu - arr_pk
            arr_e_delta = arr_delta @ arr_e
            arr_g = flt_cw2 - np.sum(arr_delta * arr_e_delta, axis=1)
            arr_viol = np.maximum(arr_g, 0.0)
            if not np.any(arr_viol > 0.0):
                continue

            arr_point_cost = flt_chi * cps.arr_scale * arr_viol ** 3
            flt_j += float(np.sum(arr_point_cost))
            arr_j_piece += np.bincount(cps.arr_piece, weights=arr_point_cost, minlength=int_m_u)

            arr_a = 3.0 * flt_chi * cps.arr_scale * arr_viol ** 2
            arr_dg_dpu = -2.0 * arr_e_delta
            arr_dg_dpk = 2.0 * arr_e_delta

            arr_vk = fn_evaluate_pieces(traj_k, arr_piece_k, arr_local_k, 1)
            arr_vk[arr_held] = 0.0

            fn_pull_to_coefficients(list_dj_dc[int_u], cps.arr_piece, cps.list_beta[0],
                                    arr_a[:, None] * arr_dg_dpu)

            arr_s_u = arr_a * np.sum(arr_dg_dpu * arr_vu, axis=1)
            arr_s_k = arr_a * np.sum(arr_dg_dpk * arr_vk, axis=1)

            # stamp and u's local time both scale with T_ui
            list_dj_dT[int_u] += np.bincount(cps.arr_piece, weights=(arr_s_u + arr_s_k) * cps.arr_frac,
                                             minlength=int_m_u)
            # the stamp shifts one-for-one with every earlier piece of u
            list_dj_dT[int_u] += fn_sum_after(np.bincount(cps.arr_piece, weights=arr_s_k,
                                                          minlength=int_m_u))

            if int_nb is None:
                continue

            arr_live = ~arr_held
            if not np.any(arr_live):
                continue

            int_m_k = traj_k.int_pieces
            arr_beta_k = fn_beta(arr_local_k[arr_live], 0, traj_k.int_n_coef)
            fn_pull_to_coefficients(list_dj_dc[int_nb], arr_piece_k[arr_live], arr_beta_k,
                                    (arr_a[:, None] * arr_dg_dpk)[arr_live])
            # k's local time shrinks with every earlier piece of k
            list_dj_dT[int_nb] -= fn_sum_after(np.bincount(arr_piece_k[arr_live],
                                                           weights=arr_s_k[arr_live],
                                                           minlength=int_m_k))

        list_dj_dT[int_u] += arr_j_piece / traj_u.arr_T

    list_dj_dc = [a.reshape(-1, 3) for a in list_dj_dc]
    return flt_j, list_dj_dc, list_dj_dT
# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,


# ............................................................
def fn_uniformity_penalty(traj, weights, cps=None):

    """
    Variance-style spread of the squared distances between consecutive
    constraint points (shared piece junctions counted once, one pooled
    mean over the whole trajectory).
    """

    int_m = traj.int_pieces
    int_n = traj.int_n_coef
    int_kappa = weights.int_kappa

    if cps is None:
        cps = fn_constraint_points(traj, int_kappa, int_max_order=1)

    int_p = cps.arr_piece.size
    arr_keep = (cps.arr_j < int_kappa) | (np.arange(int_p) == int_p - 1)

    arr_pts = cps.list_deriv[0][arr_keep]
    arr_diff = arr_pts[1:] - arr_pts[:-1]
    arr_d2 = np.sum(arr_diff * arr_diff, axis=1)
    arr_dev = arr_d2 - np.mean(arr_d2)
    flt_j = float(np.sum(arr_dev ** 2))

    arr_g = 2.0 * arr_dev
    arr_dj_dp = np.zeros_like(arr_pts)
    arr_dj_dp[1:] += (2.0 * arr_g)[:, None] * arr_diff
    arr_dj_dp[:-1] -= (2.0 * arr_g)[:, None] * arr_diff

    arr_piece = cps.arr_piece[arr_keep]
    arr_dj_dc = np.zeros((int_m, int_n, 3))
    fn_pull_to_coefficients(arr_dj_dc, arr_piece, cps.list_beta[0][arr_keep], arr_dj_dp)

    arr_dj_dt = np.sum(arr_dj_dp * cps.list_deriv[1][arr_keep], axis=1)
    arr_dj_dT = np.bincount(arr_piece, weights=arr_dj_dt * cps.arr_frac[arr_keep], minlength=int_m)

    return flt_j, arr_dj_dc.reshape(int_m * int_n, 3), arr_dj_dT
# ............................................................
