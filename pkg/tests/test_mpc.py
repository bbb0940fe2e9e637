import numpy as np
import pytest
from numpy.testing import assert_allclose

from qgc.errors import HorizonInfeasible
from qgc.mpc import (
    MpcConfig,
    MpcLoopState,
    apply_perturbation,
    descent_violations,
    mpc_step,
    run_closed_loop,
    run_open_loop,
    solve_horizon,
    terminal_cost,
)
from qgc.potentials import ObstacleSpec, is_inside_forbidden
from qgc.sphere import slerp, unit_vector
from qgc.su2 import EZ, fs_distance, minimal_lift

AXIAL = ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=6, centers=[EZ], variant="axial")

THETA_T = 2.6
TARGET = np.array([np.sin(THETA_T), 0.0, np.cos(THETA_T)])
SOUTH = np.array([0.0, 0.0, -1.0])


def make_cfg(target=TARGET, total_steps=40):
    return MpcConfig(
        horizon_steps=10,
        sample_h=0.05,
        terminal_weight=25.0,
        target=target,
        obstacle=AXIAL,
        total_steps=total_steps,
    )


def near_equilibrium_start(d0=0.002):
    # a short way back along the meridian, at rest: the local regime where
    # the value function acts as a Lyapunov function
    return slerp(TARGET, SOUTH, d0 / 0.5415926535897932)


@pytest.fixture(scope="module")
def nominal_log():
    return run_closed_loop(make_cfg(), near_equilibrium_start())


@pytest.fixture(scope="module")
def comparison_logs():
    cfg = make_cfg()
    pert = [(cfg.total_steps // 2, np.array([1.0, 0.0, 0.0]), 0.2)]
    closed = run_closed_loop(cfg, SOUTH, pert)
    open_ = run_open_loop(cfg, SOUTH, pert)
    return closed, open_


def test_terminal_cost_examples():
    cfg = make_cfg()
    assert terminal_cost(TARGET, cfg) == 0.0
    assert_allclose(terminal_cost(-TARGET, cfg), 25.0 * (np.pi / 2) ** 2, rtol=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = unit_vector(rng.normal(size=3))
        assert_allclose(
            terminal_cost(n, cfg), cfg.terminal_weight * fs_distance(n, TARGET) ** 2
        )


def test_apply_perturbation_basics():
    rng = np.random.default_rng(1)
    n = unit_vector(rng.normal(size=3))
    axis = rng.normal(size=3)
    assert_allclose(apply_perturbation(n, axis, 0.0), n)
    assert_allclose(apply_perturbation(n, axis, 2 * np.pi), n, atol=1e-12)
    once = apply_perturbation(apply_perturbation(n, axis, 0.3), axis, 0.5)
    assert_allclose(once, apply_perturbation(n, axis, 0.8), atol=1e-12)
    assert_allclose(np.linalg.norm(once), 1.0, atol=1e-14)
    with pytest.raises(ValueError):
        apply_perturbation(n, np.zeros(3), 0.1)


def test_solve_horizon_equilibrium_value_floor():
    # resting on the potential minimum with the target there: the plan
    # stays put and the value reduces to the accumulated stage potential
    cfg = make_cfg(target=SOUTH)
    sol = solve_horizon((SOUTH, SOUTH), cfg)
    assert sol.report.converged
    from qgc.potentials import potential_value

    floor = cfg.horizon_steps * cfg.sample_h * potential_value(AXIAL, SOUTH)
    assert sol.value <= floor + 1e-9
    for n in sol.predicted:
        assert fs_distance(n, SOUTH) < 1e-6


def test_mpc_step_at_equilibrium_holds_state():
    cfg = make_cfg(target=SOUTH)
    u0 = minimal_lift(SOUTH)
    applied, state = mpc_step(MpcLoopState(u_prev=u0, u_curr=u0.copy()), cfg)
    assert fs_distance(applied, SOUTH) < 1e-6


def test_warm_started_resolve_is_cheaper():
    # compare mid-transit, where the shifted plan carries real information
    cfg = make_cfg()
    u0 = minimal_lift(SOUTH)
    state = MpcLoopState(u_prev=u0, u_curr=u0.copy())
    applied, state = mpc_step(state, cfg)
    cold = solve_horizon((state.u_prev, state.u_curr), cfg, warm=None)
    warm = solve_horizon((state.u_prev, state.u_curr), cfg, warm=state.warm)
    assert warm.report.converged and cold.report.converged
    assert warm.report.iterations < cold.report.iterations


def test_nominal_descent_inequality(nominal_log):
    log = nominal_log
    assert all(r.converged for r in log.horizon_reports)
    assert np.max(descent_violations(log)) <= 1e-6
    assert np.max(np.diff(log.value_function)) <= 1e-6


def test_nominal_shift_feasibility(nominal_log):
    # every warm-started re-solve along the nominal loop converged
    assert all(r.converged for r in nominal_log.horizon_reports)


def test_nominal_practical_stability(nominal_log):
    fs = np.array([fs_distance(n, TARGET) for n in nominal_log.executed])
    assert np.all(fs[10:] <= fs[1])
    assert fs[-1] < fs[1]


def test_nominal_never_enters_forbidden_cap(nominal_log):
    for n in nominal_log.executed:
        assert not is_inside_forbidden(AXIAL, n, AXIAL.d_radius)


def test_open_loop_equals_first_solve_when_horizons_match():
    # with total_steps == horizon length both runs start from the same
    # optimization problem, so the first applied segments coincide
    cfg = make_cfg(total_steps=10)
    closed = run_closed_loop(cfg, SOUTH)
    open_ = run_open_loop(cfg, SOUTH)
    assert np.linalg.norm(closed.executed[1] - open_.executed[1]) < 1e-7
    assert_allclose(closed.value_function[0], open_.value_function[0], rtol=1e-9)


def test_perturbed_closed_loop_beats_open_loop(comparison_logs):
    closed, open_ = comparison_logs
    fs_closed = fs_distance(closed.executed[-1], TARGET)
    fs_open = fs_distance(open_.executed[-1], TARGET)
    assert fs_closed < fs_open
    assert len(closed.perturbation_events) == 1
    assert len(open_.perturbation_events) == 1
    for n in closed.executed:
        assert not is_inside_forbidden(AXIAL, n, AXIAL.d_radius)


def test_log_shapes(comparison_logs):
    closed, open_ = comparison_logs
    for log in comparison_logs:
        assert log.executed.shape == (41, 3)
        assert log.value_function.shape == (40,)
        assert log.stage_costs.shape == (40,)
    assert len(closed.horizon_reports) == 40
    assert len(open_.horizon_reports) == 1


def test_open_loop_value_telescopes_stage_costs(comparison_logs):
    # along the fixed plan the cost-to-go drops by exactly the stage cost
    _, open_ = comparison_logs
    J, ell = open_.value_function, open_.stage_costs
    assert_allclose(J[:-1] - J[1:], ell[:-1], rtol=1e-10, atol=1e-12)


def test_horizon_infeasible_raised_when_solver_cannot_converge():
    cfg = make_cfg()
    with pytest.raises(HorizonInfeasible):
        solve_horizon((SOUTH, SOUTH), cfg, max_iterations=0)
