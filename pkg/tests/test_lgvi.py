import numpy as np
import pytest
from numpy.testing import assert_allclose

from qgc.errors import ChartOverflow
from qgc.lgvi import (
    BoundaryData,
    DiscreteTrajectory,
    _kinematics,
    _transfer_matrices,
    boundary_from_states,
    del_residual,
    discrete_action,
    discrete_lagrangian,
    discrete_momentum_jz,
    solve_bvp,
)
from qgc.potentials import ObstacleSpec
from qgc.sphere import geodesic_distance, unit_vector
from qgc.su2 import (
    EZ,
    IDENTITY,
    cayley,
    project_bloch,
    reconstruct,
    rotation_matrix,
    su2_exp,
)

AXIAL = ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=6, centers=[EZ], variant="axial")


def random_trajectory(rng, n_points=9, h=0.12, scale=1.2):
    U = [su2_exp(rng.normal(size=3))]
    for _ in range(n_points - 1):
        U.append(U[-1] @ cayley(rng.normal(size=3) * scale, h))
    return np.stack(U), h


def action_by_definition(U, spec, h):
    return sum(
        discrete_lagrangian(U[k - 1], U[k], U[k + 1], spec, h) for k in range(1, len(U) - 1)
    )


def fd_action_gradient(U, spec, h, k, eps=1e-6):
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = eps
        Up = U.copy()
        Up[k] = su2_exp(e) @ U[k]
        Um = U.copy()
        Um[k] = su2_exp(-e) @ U[k]
        g[i] = (action_by_definition(Up, spec, h) - action_by_definition(Um, spec, h)) / (
            2 * eps
        )
    return g


def test_discrete_lagrangian_examples():
    assert discrete_lagrangian(IDENTITY, IDENTITY, IDENTITY, None, 0.1) == 0.0
    # equal increments: the kinetic difference vanishes
    W = cayley(np.array([0.4, -0.2, 0.7]), 0.1)
    assert abs(discrete_lagrangian(IDENTITY, W, W @ W, None, 0.1)) < 1e-25
    # one increment from rest: w^2 / (2h)
    h, w = 0.2, 1.3
    Uc = cayley(np.array([w, 0.0, 0.0]), h)
    assert_allclose(
        discrete_lagrangian(IDENTITY, IDENTITY, Uc, None, h), w**2 / (2 * h), rtol=1e-12
    )


def test_discrete_lagrangian_chart_overflow():
    # an increment rotating by more than the chart bound is rejected
    W = su2_exp(np.array([0.0, 0.0, np.pi + 0.2]))
    with pytest.raises(ChartOverflow):
        discrete_lagrangian(IDENTITY, W, W, None, 0.1)


def test_del_residual_zero_on_discrete_geodesic():
    rng = np.random.default_rng(0)
    h = 0.2
    U = reconstruct(su2_exp(rng.normal(size=3)), np.tile([0.8, -0.3, 0.5], (4, 1)), h)
    r = del_residual(U, None, h)
    assert np.linalg.norm(r) < 1e-12


def test_del_residual_matches_action_gradient_no_potential():
    rng = np.random.default_rng(1)
    for _ in range(10):
        U, h = random_trajectory(rng, n_points=5)
        r = del_residual(U, None, h)
        g = fd_action_gradient(U, None, h, 2)
        assert np.linalg.norm(r - g) / np.linalg.norm(g) < 1e-6


def test_del_residual_matches_action_gradient_axial_potential():
    rng = np.random.default_rng(2)
    for _ in range(10):
        U, h = random_trajectory(rng, n_points=5, scale=0.9)
        r = del_residual(U, AXIAL, h)
        g = fd_action_gradient(U, AXIAL, h, 2)
        assert np.linalg.norm(r - g) / np.linalg.norm(g) < 1e-6


def test_del_residual_z_component_is_momentum_flux_difference():
    # with an axially symmetric potential the z-residual telescopes the
    # conserved flux e_z . M_k (mu_{k+1} - mu_k)
    rng = np.random.default_rng(3)
    for _ in range(5):
        U, h = random_trajectory(rng, n_points=5)
        omega, mu_arr = _kinematics(U, h)
        M = _transfer_matrices(U, omega, h)
        mu = np.concatenate([np.zeros((1, 3)), mu_arr])
        flux = lambda k: float(EZ @ (M[k] @ (mu[k + 1] - mu[k])))
        r = del_residual(U, AXIAL, h)
        assert_allclose(r[2], (flux(2) - flux(1)) / h, rtol=1e-10, atol=1e-12)


def test_solve_bvp_recovers_discrete_geodesics():
    rng = np.random.default_rng(4)
    h, K = 0.25, 12
    for _ in range(3):
        w = 1.2 * unit_vector(rng.normal(size=3))
        U = reconstruct(su2_exp(rng.normal(size=3)), np.tile(w, (K, 1)), h)
        bd = BoundaryData(u0=U[0], u1=U[1], u_km1=U[K - 1], uk=U[K])
        traj, rep = solve_bvp(bd, K, None, h, tol=1e-12)
        assert rep.converged
        assert rep.residual_norm <= 1e-12
        assert rep.action <= 1e-20
        assert np.max(np.abs(traj.generators - traj.generators.mean(axis=0))) < 1e-9
        assert_allclose(traj.bloch, project_bloch(U), atol=1e-9)


def test_solve_bvp_endpoints_bitwise_and_report_shapes():
    bd = boundary_from_states([0.0, 0, -1], [2.0, 0, 0], [1.0, 0, 0], [0.0, 0, 0], 0.05)
    traj, rep = solve_bvp(bd, 20, None, 0.05)
    assert rep.converged
    assert traj.unitaries[0].tobytes() == bd.u0.tobytes()
    assert traj.unitaries[1].tobytes() == bd.u1.tobytes()
    assert traj.unitaries[-2].tobytes() == bd.u_km1.tobytes()
    assert traj.unitaries[-1].tobytes() == bd.uk.tobytes()
    assert len(rep.momentum_jz) == 19
    assert len(traj) == 21


def test_solve_bvp_reference_obstacle_run():
    theta_T = 0.40
    bd = boundary_from_states(
        [0.0, 0.0, -1.0],
        [2.8, 0.0, 0.0],
        [np.sin(theta_T), 0.0, np.cos(theta_T)],
        [0.0, 0.0, 0.0],
        0.01,
    )
    traj, rep = solve_bvp(bd, 100, AXIAL, 0.01)
    assert rep.converged and rep.residual_norm <= 1e-9
    # every point clears the forbidden cap; the terminal sits at D + 0.05
    angles = np.array([geodesic_distance(n, EZ) for n in traj.bloch])
    assert np.all(angles >= AXIAL.d_radius)
    assert_allclose(angles[-1], theta_T, atol=1e-12)
    # planar scenario: the discrete axial momentum is exactly flat
    jz = rep.momentum_jz
    assert np.max(np.abs(jz - jz.mean())) <= 1e-8
    # group trajectory stays on the sphere to rounding
    assert np.max(np.abs(np.linalg.norm(traj.bloch, axis=1) - 1.0)) <= 1e-12


def test_warm_start_reconverges_faster():
    bd = boundary_from_states([0.0, 0, -1], [2.0, 0, 0], [1.0, 0, 0], [0.0, 1.0, 0], 0.05)
    traj, rep_cold = solve_bvp(bd, 16, AXIAL, 0.05)
    assert rep_cold.converged
    rng = np.random.default_rng(5)
    U = traj.unitaries.copy()
    for k in range(2, len(U) - 2):
        U[k] = su2_exp(1e-4 * rng.normal(size=3)) @ U[k]
    warm = DiscreteTrajectory.from_unitaries(U, traj.h)
    _, rep_warm = solve_bvp(bd, 16, AXIAL, 0.05, init=warm)
    assert rep_warm.converged
    assert rep_warm.iterations < rep_cold.iterations


def test_action_decreases_along_damped_iterations():
    bd = boundary_from_states(
        [0.0, 0, -1.0], [2.0, 0, 0], unit_vector([1.0, 0, 0.5]), [0.0, 1.0, 0], 0.05
    )
    _, rep = solve_bvp(bd, 20, AXIAL, 0.05)
    hist = np.array(rep.action_history)
    assert rep.converged and len(hist) >= 3
    assert np.all(np.diff(hist) <= 1e-12)


def test_free_terminal_velocity_mode():
    theta_T = 0.40
    bd = boundary_from_states(
        [0.0, 0.0, -1.0], [2.8, 0.0, 0.0], [np.sin(theta_T), 0.0, np.cos(theta_T)], None, 0.02
    )
    traj, rep = solve_bvp(bd, 50, AXIAL, 0.02)
    assert rep.converged
    assert_allclose(traj.bloch[-1], [np.sin(theta_T), 0.0, np.cos(theta_T)], atol=1e-12)
    # the penultimate point is genuinely free: nonzero final increment allowed
    assert traj.unitaries[-2].tobytes() != traj.unitaries[-1].tobytes()


def test_discrete_action_left_translation_equivariance():
    rng = np.random.default_rng(6)
    U, h = random_trajectory(rng, n_points=8, scale=0.8)
    spec = ObstacleSpec(
        tau=4.0, d_radius=0.6, sharpness=2, centers=[[0.0, 0.0, 1.0]], variant="point"
    )
    G = su2_exp(rng.normal(size=3))
    rotated = ObstacleSpec(
        tau=4.0,
        d_radius=0.6,
        sharpness=2,
        centers=[rotation_matrix(G) @ np.array([0.0, 0.0, 1.0])],
        variant="point",
    )
    t1 = DiscreteTrajectory.from_unitaries(U, h)
    t2 = DiscreteTrajectory.from_unitaries(G @ U, h)
    assert_allclose(discrete_action(t2, rotated), discrete_action(t1, spec), rtol=1e-12)


def test_discrete_momentum_constant_generators_and_generic():
    h = 0.1
    U = reconstruct(IDENTITY, np.tile([0.3, 0.1, -0.2], (6, 1)), h)
    traj = DiscreteTrajectory.from_unitaries(U, h)
    assert_allclose(discrete_momentum_jz(traj), np.zeros(5), atol=1e-13)
    rng = np.random.default_rng(7)
    U2, h2 = random_trajectory(rng, n_points=7)
    jz = discrete_momentum_jz(DiscreteTrajectory.from_unitaries(U2, h2))
    assert np.max(np.abs(jz - jz.mean())) > 1e-3


def test_boundary_rest_pair_is_duplicated_unitary():
    bd = boundary_from_states([0.0, 0, -1], [1.0, 0, 0], [1.0, 0, 0], [0.0, 0, 0], 0.01)
    assert_allclose(bd.u_km1, bd.uk, atol=1e-15)


def test_solve_bvp_requires_five_steps():
    bd = boundary_from_states([0.0, 0, -1], [1.0, 0, 0], [1.0, 0, 0], [0.0, 0, 0], 0.1)
    with pytest.raises(ValueError):
        solve_bvp(bd, 4, None, 0.1)
