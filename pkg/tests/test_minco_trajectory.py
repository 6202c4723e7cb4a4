# Tests of the minimum control effort trajectory class: construction,
# evaluation, gradient propagation and the virtual time transform.
#
# Created by: Andy Carter, PE
# Created - 2024.03.27
# Last revised - 2024.04.30
#
# swarm-group-plan - tests


# ************************************************************
import numpy as np
import pytest
from scipy.integrate import quad

from minco_trajectory import (MincoTrajectory, fn_beta, fn_boundary_state, fn_coefficient_df,
                              fn_construct_minco, fn_durations_to_tau, fn_evaluate,
                              fn_evaluate_many, fn_locate_piece, fn_propagate_gradients,
                              fn_sample_trajectory_df, fn_tau_to_durations, fn_virtual_time_chain)
from penalty_terms import fn_control_effort
from planner_errors import ContractError, TrajectoryDomainError
# ************************************************************


# ------------------------------------------------------------
def fn_rest_to_rest(arr_a=(0.0, 0.0, 0.0), arr_b=(1.0, 0.0, 0.0), flt_T=1.0):
    return fn_construct_minco(np.zeros((0, 3)), [flt_T], fn_boundary_state(arr_a), fn_boundary_state(arr_b))


def fn_random_trajectory(rng, int_pieces, int_s=3):
    arr_head = rng.normal(size=(int_s, 3))
    arr_tail = rng.normal(size=(int_s, 3))
    arr_q = rng.normal(size=(int_pieces - 1, 3)) * 2.0
    arr_T = rng.uniform(0.5, 2.0, size=int_pieces)
    return MincoTrajectory(arr_q, arr_T, arr_head, arr_tail, int_s)
# ------------------------------------------------------------


def test_beta_rows():
    assert fn_beta(2.0, 0, 6) == pytest.approx([1, 2, 4, 8, 16, 32])
    assert fn_beta(2.0, 1, 6) == pytest.approx([0, 1, 4, 12, 32, 80])
    assert fn_beta(np.array([0.0, 1.0]), 3, 6).shape == (2, 6)
    assert fn_beta(1.0, 3, 6) == pytest.approx([0, 0, 0, 6, 24, 60])


def test_minimum_jerk_quintic():
    traj = fn_rest_to_rest()
    assert traj.fn_block(0)[:, 0] == pytest.approx([0, 0, 0, 10, -15, 6], abs=1e-9)
    assert traj.fn_block(0)[:, 1:] == pytest.approx(np.zeros((6, 2)), abs=1e-12)

    assert fn_evaluate(traj, 0.0) == pytest.approx([0, 0, 0], abs=1e-12)
    assert fn_evaluate(traj, 0.0, 1) == pytest.approx([0, 0, 0], abs=1e-12)
    assert fn_evaluate(traj, 0.5)[0] == pytest.approx(0.5)
    assert fn_evaluate(traj, 1.0)[0] == pytest.approx(1.0)

    flt_je, _, _ = fn_control_effort(traj)
    assert flt_je == pytest.approx(720.0)


def test_stationary_trajectory():
    arr_p = np.array([1.0, -2.0, 0.5])
    traj = MincoTrajectory(np.tile(arr_p, (2, 1)), [1.0, 2.0, 0.5],
                           fn_boundary_state(arr_p), fn_boundary_state(arr_p))
    for i in range(3):
        arr_block = traj.fn_block(i)
        assert arr_block[0] == pytest.approx(arr_p)
        assert arr_block[1:] == pytest.approx(np.zeros((5, 3)), abs=1e-10)
    assert fn_control_effort(traj)[0] == pytest.approx(0.0, abs=1e-12)


def test_time_reversal_symmetry():
    arr_head = fn_boundary_state((0.0, 0.0, 0.0))
    arr_tail = fn_boundary_state((2.0, 0.0, 0.0))
    traj = MincoTrajectory([[1.0, 0.5, 0.0]], [1.0, 1.0], arr_head, arr_tail)

    for flt_t in np.linspace(0.0, 2.0, 21):
        arr_fwd = fn_evaluate(traj, flt_t)
        arr_bwd = fn_evaluate(traj, 2.0 - flt_t)
        assert arr_fwd[0] == pytest.approx(2.0 - arr_bwd[0], abs=1e-9)
        assert arr_fwd[1] == pytest.approx(arr_bwd[1], abs=1e-9)


def test_boundary_and_waypoints_are_honoured(rng):
    traj = fn_random_trajectory(rng, 4)
    for d in range(3):
        assert fn_evaluate(traj, 0.0, d) == pytest.approx(traj.arr_head[d], abs=1e-9)
        assert fn_evaluate(traj, traj.flt_duration, d) == pytest.approx(traj.arr_tail[d], abs=1e-8)
    arr_ends = np.cumsum(traj.arr_T)[:-1]
    for i, flt_t in enumerate(arr_ends):
        assert fn_evaluate(traj, flt_t) == pytest.approx(traj.arr_q[i], abs=1e-9)


@pytest.mark.parametrize('int_s', [2, 3, 4])
def test_junction_continuity(rng, int_s):
    for _ in range(10):
        traj = fn_random_trajectory(rng, int(rng.integers(2, 6)), int_s)
        int_n = traj.int_n_coef
        flt_scale = max(1.0, float(np.max(np.abs(traj.arr_c))))
        for i in range(traj.int_pieces - 1):
            for d in range(2 * int_s - 1):
                arr_end = fn_beta(traj.arr_T[i], d, int_n) @ traj.fn_block(i)
                arr_start = fn_beta(0.0, d, int_n) @ traj.fn_block(i + 1)
                assert np.max(np.abs(arr_end - arr_start)) <= 1e-9 * flt_scale * 10 ** d


def test_construction_minimizes_effort(rng):
    # pieces joined with arbitrary velocity and acceleration keep C2 but
    # never beat the constructed energy
    for _ in range(5):
        int_m = int(rng.integers(2, 4))
        traj = fn_random_trajectory(rng, int_m)
        flt_best = fn_control_effort(traj)[0]

        arr_ends = np.concatenate([[0.0], np.cumsum(traj.arr_T)])
        list_states = [traj.arr_head] + \
                      [np.vstack([fn_evaluate(traj, t, d) for d in range(3)]) for t in arr_ends[1:-1]] + \
                      [traj.arr_tail]

        for _ in range(10):
            list_perturbed = [list_states[0]]
            for arr_state in list_states[1:-1]:
                arr_new = arr_state.copy()
                arr_new[1:] += rng.normal(scale=0.5, size=(2, 3))
                list_perturbed.append(arr_new)
            list_perturbed.append(list_states[-1])

            flt_energy = 0.0
            for i in range(int_m):
                traj_piece = MincoTrajectory(np.zeros((0, 3)), [traj.arr_T[i]],
                                             list_perturbed[i], list_perturbed[i + 1])
                flt_energy += fn_control_effort(traj_piece)[0]
            assert flt_energy >= flt_best - 1e-9 * max(1.0, flt_best)


def test_bad_durations_raise():
    arr_head = fn_boundary_state((0, 0, 0))
    with pytest.raises(TrajectoryDomainError):
        MincoTrajectory(np.zeros((1, 3)), [1.0, 0.0], arr_head, arr_head)
    with pytest.raises(TrajectoryDomainError):
        MincoTrajectory(np.zeros((0, 3)), [-1.0], arr_head, arr_head)
    with pytest.raises(TrajectoryDomainError):
        MincoTrajectory(np.zeros((0, 3)), [], arr_head, arr_head)
    with pytest.raises(ValueError):
        MincoTrajectory(np.zeros((0, 3)), [np.nan], arr_head, arr_head)


def test_locate_and_clamp():
    traj = MincoTrajectory([[1.0, 0.0, 0.0]], [1.0, 2.0], fn_boundary_state((0, 0, 0)),
                           fn_boundary_state((2, 0, 0)))
    assert fn_locate_piece(traj, 0.5) == (0, pytest.approx(0.5), False)
    assert fn_locate_piece(traj, 1.5) == (1, pytest.approx(0.5), False)
    assert fn_locate_piece(traj, 3.0) == (1, pytest.approx(2.0), False)
    assert fn_locate_piece(traj, 4.0) == (1, pytest.approx(2.0), True)
    assert fn_locate_piece(traj, -1.0) == (0, pytest.approx(0.0), True)

    arr_p, b_flag = fn_evaluate(traj, 10.0, 0, b_return_flag=True)
    assert b_flag
    assert arr_p == pytest.approx([2, 0, 0], abs=1e-9)

    with pytest.raises(ContractError):
        fn_evaluate(traj, 0.5, 6)


def test_velocity_integrates_to_displacement(rng):
    traj = fn_random_trajectory(rng, 3)
    arr_ends = np.concatenate([[0.0], np.cumsum(traj.arr_T)])
    for int_axis in range(3):
        flt_disp = sum(quad(lambda t: fn_evaluate(traj, t, 1)[int_axis], arr_ends[i], arr_ends[i + 1])[0]
                       for i in range(traj.int_pieces))
        flt_truth = traj.arr_tail[0, int_axis] - traj.arr_head[0, int_axis]
        assert flt_disp == pytest.approx(flt_truth, abs=1e-6)


def test_evaluate_many_matches_scalar(rng):
    traj = fn_random_trajectory(rng, 3)
    arr_t = np.linspace(0.0, traj.flt_duration, 17)
    arr_many = fn_evaluate_many(traj, arr_t, 2)
    for i, flt_t in enumerate(arr_t):
        assert arr_many[i] == pytest.approx(fn_evaluate(traj, flt_t, 2))


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def fn_quadratic_cost(arr_w, arr_b, flt_a):
    # F(c, T) = sum(w c^2) + sum(b c) + a sum(T^2)
    def fn_cost(arr_q, arr_T, arr_head, arr_tail):
        traj = MincoTrajectory(arr_q, arr_T, arr_head, arr_tail)
        flt_f = float(np.sum(arr_w * traj.arr_c ** 2) + np.sum(arr_b * traj.arr_c) + flt_a * np.sum(arr_T ** 2))
        return flt_f, traj, 2.0 * arr_w * traj.arr_c + arr_b, 2.0 * flt_a * arr_T
    return fn_cost


@pytest.mark.parametrize('int_pieces', [1, 2, 4])
def test_propagated_gradient_matches_finite_differences(rng, int_pieces):
    traj = fn_random_trajectory(rng, int_pieces)
    int_dim = 6 * int_pieces
    fn_cost = fn_quadratic_cost(rng.uniform(0.1, 1.0, size=(int_dim, 3)),
                                rng.normal(size=(int_dim, 3)), 0.7)

    _, traj, arr_df_dc, arr_df_dT = fn_cost(traj.arr_q, traj.arr_T, traj.arr_head, traj.arr_tail)
    arr_dq, arr_dT = fn_propagate_gradients(traj, arr_df_dc, arr_df_dT)
    assert arr_dq.shape == (int_pieces - 1, 3)
    assert arr_dT.shape == (int_pieces,)

    flt_h = 1e-6
    arr_fd_q = np.zeros_like(traj.arr_q)
    for idx in np.ndindex(*traj.arr_q.shape):
        arr_plus = traj.arr_q.copy()
        arr_minus = traj.arr_q.copy()
        arr_plus[idx] += flt_h
        arr_minus[idx] -= flt_h
        arr_fd_q[idx] = (fn_cost(arr_plus, traj.arr_T, traj.arr_head, traj.arr_tail)[0] -
                         fn_cost(arr_minus, traj.arr_T, traj.arr_head, traj.arr_tail)[0]) / (2 * flt_h)

    arr_fd_T = np.zeros_like(traj.arr_T)
    for i in range(int_pieces):
        arr_plus = traj.arr_T.copy()
        arr_minus = traj.arr_T.copy()
        arr_plus[i] += flt_h
        arr_minus[i] -= flt_h
        arr_fd_T[i] = (fn_cost(traj.arr_q, arr_plus, traj.arr_head, traj.arr_tail)[0] -
                       fn_cost(traj.arr_q, arr_minus, traj.arr_head, traj.arr_tail)[0]) / (2 * flt_h)

    arr_grad = np.concatenate([arr_dq.ravel(), arr_dT])
    arr_fd = np.concatenate([arr_fd_q.ravel(), arr_fd_T])
    assert np.linalg.norm(arr_grad - arr_fd) <= 1e-6 * max(np.linalg.norm(arr_fd), 1e-6)


def test_propagate_degenerate_and_shape_errors(rng):
    traj = fn_random_trajectory(rng, 3)
    arr_df_dT = rng.normal(size=3)
    arr_dq, arr_dT = fn_propagate_gradients(traj, np.zeros_like(traj.arr_c), arr_df_dT)
    assert arr_dq == pytest.approx(np.zeros((2, 3)))
    assert arr_dT == pytest.approx(arr_df_dT)

    with pytest.raises(ContractError):
        fn_propagate_gradients(traj, np.zeros((5, 3)), arr_df_dT)
    with pytest.raises(ContractError):
        fn_propagate_gradients(traj, np.zeros_like(traj.arr_c), np.zeros(2))
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ````````````````````````````````````````````````````````````
def test_virtual_time(rng):
    assert fn_tau_to_durations([0.0, 0.0]) == pytest.approx([1.0, 1.0])
    assert fn_virtual_time_chain([np.log(2.0)], [1.0]) == pytest.approx([2.0])
    assert fn_virtual_time_chain([0.0, 0.0], [1.0, 1.0]) == pytest.approx([1.0, 1.0])

    arr_tau = rng.normal(size=5)
    assert fn_durations_to_tau(fn_tau_to_durations(arr_tau)) == pytest.approx(arr_tau, abs=1e-12)
    with pytest.raises(TrajectoryDomainError):
        fn_durations_to_tau([1.0, 0.0])

    # J = sum T  =>  dJ/dtau_i = T_i
    flt_h = 1e-6
    arr_grad = fn_virtual_time_chain(arr_tau, np.ones(5))
    for i in range(5):
        arr_plus = arr_tau.copy()
        arr_minus = arr_tau.copy()
        arr_plus[i] += flt_h
        arr_minus[i] -= flt_h
        flt_fd = (np.sum(fn_tau_to_durations(arr_plus)) - np.sum(fn_tau_to_durations(arr_minus))) / (2 * flt_h)
        assert arr_grad[i] == pytest.approx(flt_fd, rel=1e-6)
        assert arr_grad[i] == pytest.approx(np.exp(arr_tau[i]))
# ````````````````````````````````````````````````````````````


# ............................................................
def test_sample_and_coefficient_tables():
    traj = fn_rest_to_rest(flt_T=2.0)
    df = fn_sample_trajectory_df(traj, flt_rate=10.0, flt_t_offset=5.0)
    assert list(df.columns) == ['t', 'x', 'y', 'z', 'vx', 'vy', 'vz', 'ax', 'ay', 'az']
    assert len(df) == 21
    assert df['t'].iloc[0] == pytest.approx(5.0)
    assert df['t'].iloc[-1] == pytest.approx(7.0)
    assert df['x'].iloc[-1] == pytest.approx(1.0)
    assert df['vx'].iloc[10] == pytest.approx(1.875 / 2.0)

    df_coef = fn_coefficient_df(traj)
    assert len(df_coef) == 6
    assert list(df_coef.columns) == ['piece', 'power', 'duration', 'cx', 'cy', 'cz']
# ............................................................
