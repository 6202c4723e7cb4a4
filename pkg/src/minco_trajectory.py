# Minimum control effort piecewise polynomial trajectories.  A trajectory
# is defined by its intermediate waypoints q, its piece durations T and
# clamped boundary states; the polynomial coefficients follow from one
# sparse banded linear solve, and gradients of any cost of the
# coefficients are pulled back to (q, T) with the transposed factors of
# that same solve.
#
# Created by: Andy Carter, PE
# Created - 2024.03.25
# Last revised - 2024.04.30 - adjoint through the cached factorization
#
# swarm-group-plan - trajectory class


# ************************************************************
from dataclasses import dataclass, field
from math import factorial

import numpy as np
import pandas as pd
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from planner_errors import ContractError, TrajectoryDomainError
# ************************************************************


# ------------------------------------------------------------
def fn_beta(arr_t, int_order, int_n_coef):

    """
    Derivative basis: row p is d^order/dt^order of [1, t, ..., t^(n-1)]
    evaluated at arr_t[p].

    Args:
        arr_t: scalar or (P,) local times
        int_order: derivative order
        int_n_coef: coefficients per piece (2s)

    Returns:
        (P, int_n_coef) array, or (int_n_coef,) for a scalar time
    """

    b_scalar = np.ndim(arr_t) == 0
    arr_t = np.atleast_1d(np.asarray(arr_t, dtype=float))
    arr_beta = np.zeros((arr_t.size, int_n_coef))

    for k in range(int_order, int_n_coef):
        flt_scale = factorial(k) / factorial(k - int_order)
        arr_beta[:, k] = flt_scale * arr_t ** (k - int_order)

    if b_scalar:
        return arr_beta[0]
    return arr_beta
# ------------------------------------------------------------


# ------------------------------------------------------------
@dataclass(eq=False)
class MincoTrajectory:
    """
    Piecewise polynomial of degree 2s-1 through waypoints arr_q with piece
    durations arr_T.  arr_head and arr_tail hold position, velocity, ...
    up to derivative s-1 at the two ends (one row each).  arr_c stacks the
    2s x 3 coefficient block of every piece.
    """

    arr_q: np.ndarray
    arr_T: np.ndarray
    arr_head: np.ndarray
    arr_tail: np.ndarray
    int_s: int = 3
    arr_c: np.ndarray = field(init=False, repr=False, default=None)
    lu_system: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.arr_T = np.atleast_1d(np.asarray(self.arr_T, dtype=float))
        int_m = self.arr_T.size
        self.arr_q = np.asarray(self.arr_q, dtype=float).reshape(max(int_m - 1, 0), 3)
        self.arr_head = np.asarray(self.arr_head, dtype=float).reshape(self.int_s, 3)
        self.arr_tail = np.asarray(self.arr_tail, dtype=float).reshape(self.int_s, 3)

        if int_m < 1:
            raise TrajectoryDomainError('a trajectory needs at least one piece')
        if not np.all(np.isfinite(self.arr_T)) or np.any(self.arr_T <= 0.0):
            raise TrajectoryDomainError('piece durations must be positive: ' + str(self.arr_T))

        self.arr_c, self.lu_system = fn_solve_coefficients(self.arr_q, self.arr_T,
                                                           self.arr_head, self.arr_tail,
                                                           self.int_s)

    @property
    def int_pieces(self):
        return self.arr_T.size

    @property
    def int_n_coef(self):
        return 2 * self.int_s

    @property
    def flt_duration(self):
        return float(np.sum(self.arr_T))

    @property
    def arr_piece_start(self):
        return np.concatenate([[0.0], np.cumsum(self.arr_T)[:-1]])

    def fn_block(self, int_piece):
        int_n = self.int_n_coef
        return self.arr_c[int_n * int_piece:int_n * (int_piece + 1)]
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_system_rows(int_pieces, int_s):

    """
    Row bookkeeping of the banded system.  Rows: s head conditions; per
    junction one waypoint row and 2s-1 continuity rows (orders 0..2s-2);
    s tail conditions.

    Returns:
        list_q_rows: row of waypoint i
        list_end_rows: per piece, (row, derivative order) pairs that
            evaluate the piece at its end time
    """

    int_n = 2 * int_s
    list_q_rows = []
    list_end_rows = [[] for _ in range(int_pieces)]

    for i in range(int_pieces - 1):
        int_base = int_s + int_n * i
        list_q_rows.append(int_base)
        list_end_rows[i].append((int_base, 0))
        for d in range(int_n - 1):
            list_end_rows[i].append((int_base + 1 + d, d))

    int_tail = int_s + int_n * (int_pieces - 1)
    for d in range(int_s):
        list_end_rows[int_pieces - 1].append((int_tail + d, d))

    return list_q_rows, list_end_rows
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_solve_coefficients(arr_q, arr_T, arr_head, arr_tail, int_s=3):

    """
    Assemble and factor the banded system A(T) c = b(q) and solve it.

    Returns:
        arr_c: (2sM, 3) coefficients
        lu_system: sparse LU factors of A, reused for gradients
    """

    int_m = arr_T.size
    int_n = 2 * int_s
    int_dim = int_n * int_m

    list_rows = []
    list_cols = []
    list_vals = []
    arr_b = np.zeros((int_dim, 3))

    def fn_put(int_row, int_piece, arr_coef):
        for k in np.nonzero(arr_coef)[0]:
            list_rows.append(int_row)
            list_cols.append(int_n * int_piece + k)
            list_vals.append(arr_coef[k])

    # head conditions
    for d in range(int_s):
        fn_put(d, 0, fn_beta(0.0, d, int_n))
        arr_b[d] = arr_head[d]

    list_q_rows, list_end_rows = fn_system_rows(int_m, int_s)

    for i in range(int_m - 1):
        for int_row, d in list_end_rows[i]:
            fn_put(int_row, i, fn_beta(arr_T[i], d, int_n))
        arr_b[list_q_rows[i]] = arr_q[i]
        # continuity rows subtract the next piece at its start
        for int_row, d in list_end_rows[i][1:]:
            fn_put(int_row, i + 1, -fn_beta(0.0, d, int_n))

    for int_row, d in list_end_rows[int_m - 1]:
        fn_put(int_row, int_m - 1, fn_beta(arr_T[int_m - 1], d, int_n))
        arr_b[int_row] = arr_tail[d]

    arr_a = csc_matrix((list_vals, (list_rows, list_cols)), shape=(int_dim, int_dim))

    try:
        lu_system = splu(arr_a)
    except RuntimeError as e:
        raise TrajectoryDomainError('singular trajectory system: ' + str(e))

    arr_c = lu_system.solve(arr_b)
    return arr_c, lu_system
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ````````````````````````````````````````````````````````````
def fn_construct_minco(arr_q, arr_T, arr_head, arr_tail, int_s=3):
    # trajectory from waypoints, durations and boundary states
    return MincoTrajectory(arr_q, arr_T, arr_head, arr_tail, int_s)


def fn_boundary_state(arr_pos, arr_vel=None, arr_acc=None, int_s=3):
    # (s,3) boundary block, missing derivatives zero
    arr_state = np.zeros((int_s, 3))
    arr_state[0] = arr_pos
    if arr_vel is not None and int_s > 1:
        arr_state[1] = arr_vel
    if arr_acc is not None and int_s > 2:
        arr_state[2] = arr_acc
    return arr_state
# ````````````````````````````````````````````````````````````


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_locate_pieces(traj, arr_t):
    # piece index, local time and clamp flag for global times
    arr_t = np.atleast_1d(np.asarray(arr_t, dtype=float))
    flt_total = traj.flt_duration
    arr_clamped = np.clip(arr_t, 0.0, flt_total)
    arr_flag = np.abs(arr_clamped - arr_t) > 1e-12

    arr_ends = np.cumsum(traj.arr_T)
    arr_piece = np.searchsorted(arr_ends, arr_clamped, side='right')
    arr_piece = np.minimum(arr_piece, traj.int_pieces - 1)
    arr_local = arr_clamped - traj.arr_piece_start[arr_piece]
    arr_local = np.clip(arr_local, 0.0, traj.arr_T[arr_piece])

    return arr_piece, arr_local, arr_flag


def fn_locate_piece(traj, flt_t):
    arr_piece, arr_local, arr_flag = fn_locate_pieces(traj, flt_t)
    return int(arr_piece[0]), float(arr_local[0]), bool(arr_flag[0])
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
def fn_evaluate_pieces(traj, arr_piece, arr_local, int_order):
    # order-th derivative for (piece, local time) pairs -> (P,3)
    int_n = traj.int_n_coef
    arr_beta = fn_beta(arr_local, int_order, int_n)
    arr_blocks = traj.arr_c.reshape(traj.int_pieces, int_n, 3)[arr_piece]
    return np.einsum('pk,pkm->pm', arr_beta, arr_blocks)


def fn_evaluate_many(traj, arr_t, int_order=0):
    arr_piece, arr_local, _ = fn_locate_pieces(traj, arr_t)
    return fn_evaluate_pieces(traj, arr_piece, arr_local, int_order)


def fn_evaluate(traj, flt_t, int_order=0, b_return_flag=False):

    """
    Position (order 0) or one of its derivatives at a global time.  Times
    outside [0, duration] are clamped.

    Returns:
        3-vector, plus the clamp flag when b_return_flag
    """

    if int_order < 0 or int_order >= traj.int_n_coef:
        raise ContractError('derivative order out of range: ' + str(int_order))

    arr_piece, arr_local, arr_flag = fn_locate_pieces(traj, flt_t)
    arr_value = fn_evaluate_pieces(traj, arr_piece, arr_local, int_order)[0]

    if b_return_flag:
        return arr_value, bool(arr_flag[0])
    return arr_value
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,
def fn_propagate_gradients(traj, arr_df_dc, arr_df_dT):

    """
    Gradient of J(q, T) = F(c(q, T), T) from the partials of F.

    The adjoint G = A^-T dF/dc gives dJ/dq_i as the waypoint rows of G.
    A row r that evaluates piece i at its end with derivative order d
    depends on T_i, so dJ/dT_i = dF/dT_i - sum_r G_r . p_i^(d+1)(T_i).

    Args:
        traj: MincoTrajectory
        arr_df_dc: (2sM, 3)
        arr_df_dT: (M,)

    Returns:
        arr_dj_dq: (M-1, 3)
        arr_dj_dT: (M,)
    """

    int_m = traj.int_pieces
    int_n = traj.int_n_coef
    arr_df_dc = np.asarray(arr_df_dc, dtype=float)
    arr_df_dT = np.asarray(arr_df_dT, dtype=float)

    if arr_df_dc.shape != (int_n * int_m, 3):
        raise ContractError('dF/dc shape ' + str(arr_df_dc.shape) + ' does not match c ' +
                            str((int_n * int_m, 3)))
    if arr_df_dT.shape != (int_m,):
        raise ContractError('dF/dT length ' + str(arr_df_dT.shape) + ' does not match M=' + str(int_m))

    arr_adjoint = traj.lu_system.solve(arr_df_dc, trans='T')

    list_q_rows, list_end_rows = fn_system_rows(int_m, traj.int_s)
    arr_dj_dq = arr_adjoint[list_q_rows] if int_m > 1 else np.zeros((0, 3))

    arr_dj_dT = arr_df_dT.copy()
    for i in range(int_m):
        arr_block = traj.fn_block(i)
        for int_row, d in list_end_rows[i]:
            arr_deriv = fn_beta(traj.arr_T[i], d + 1, int_n) @ arr_block
            arr_dj_dT[i] -= float(arr_adjoint[int_row] @ arr_deriv)

    return np.array(arr_dj_dq), arr_dj_dT
# ,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,,


# ````````````````````````````````````````````````````````````
def fn_tau_to_durations(arr_tau):
    return np.exp(np.asarray(arr_tau, dtype=float))


def fn_durations_to_tau(arr_T):
    arr_T = np.asarray(arr_T, dtype=float)
    if np.any(arr_T <= 0):
        raise TrajectoryDomainError('durations must be positive')
    return np.log(arr_T)


def fn_virtual_time_chain(arr_tau, arr_dj_dT):
    # T = exp(tau)  =>  dJ/dtau = dJ/dT * exp(tau)
    return np.asarray(arr_dj_dT, dtype=float) * np.exp(np.asarray(arr_tau, dtype=float))
# ````````````````````````````````````````````````````````````


# ............................................................
def fn_sample_trajectory_df(traj, flt_rate=20.0, flt_t_offset=0.0):
    # sampled states (t, x..az) at flt_rate Hz, end point included
    flt_total = traj.flt_duration
    int_n = max(2, int(np.ceil(flt_total * flt_rate)) + 1)
    arr_t = np.linspace(0.0, flt_total, int_n)

    arr_p = fn_evaluate_many(traj, arr_t, 0)
    arr_v = fn_evaluate_many(traj, arr_t, 1)
    arr_a = fn_evaluate_many(traj, arr_t, 2)

    df = pd.DataFrame(np.column_stack([arr_t + flt_t_offset, arr_p, arr_v, arr_a]),
                      columns=['t', 'x', 'y', 'z', 'vx', 'vy', 'vz', 'ax', 'ay', 'az'])
    return df


def fn_coefficient_df(traj):
    # one row per piece and coefficient power
    list_rows = []
    for i in range(traj.int_pieces):
        arr_block = traj.fn_block(i)
        for k in range(traj.int_n_coef):
            list_rows.append([i, k, traj.arr_T[i], arr_block[k, 0], arr_block[k, 1], arr_block[k, 2]])

    return pd.DataFrame(list_rows, columns=['piece', 'power', 'duration', 'cx', 'cy', 'cz'])
# ............................................................
