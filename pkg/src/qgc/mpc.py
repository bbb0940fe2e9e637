"""Receding-horizon control built on the discrete variational solver.

Each sampling instant solves a free-right-endpoint horizon problem: the
pair (previous executed point, current point) is pinned, since a
second-order model needs position and velocity; the terminal point is
penalized by a squared projective distance to the target, and only the
first predicted segment is applied before the horizon shifts forward.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import AntipodalPoints, GradientSingularity, HorizonInfeasible
from .lgvi import (
    DiscreteTrajectory,
    SolverReport,
    _action,
    discrete_lagrangian,
    discrete_momentum_jz,
    solve_stationary,
)
from .potentials import ObstacleSpec
from .sphere import geodesic_distance, slerp, unit_vector
from .su2 import fs_distance, lift_step, minimal_lift, project_bloch, su2_exp, unitarize


@dataclass(frozen=True)
class MpcConfig:
    horizon_steps: int
    sample_h: float
    terminal_weight: float
    target: np.ndarray
    obstacle: Optional[ObstacleSpec]
    total_steps: int
    descent_tolerance: float = 1e-6

    def __post_init__(self):
        if self.horizon_steps < 5:
            raise ValueError("horizon_steps must be at least 5")
        if self.sample_h <= 0:
            raise ValueError("sample_h must be positive")
        if self.terminal_weight <= 0:
            raise ValueError("terminal_weight must be positive")
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        object.__setattr__(self, "target", unit_vector(self.target))


@dataclass(frozen=True)
class Perturbation:
    """A state kick: rotation of the executed state about ``axis``."""

    step: int
    axis: np.ndarray
    angle: float


@dataclass(frozen=True)
class HorizonSolution:
    trajectory: DiscreteTrajectory
    predicted: np.ndarray
    value: float
    stage_cost: float
    report: SolverReport


@dataclass(frozen=True)
class MpcLoopState:
    u_prev: np.ndarray
    u_curr: np.ndarray
    warm: Optional[np.ndarray] = None
    solution: Optional[HorizonSolution] = None


@dataclass(frozen=True)
class ClosedLoopLog:
    executed: np.ndarray
    value_function: np.ndarray
    stage_costs: np.ndarray
    horizon_reports: Sequence[SolverReport]
    perturbation_events: Sequence[tuple[int, np.ndarray, float]]
    executed_unitaries: np.ndarray = None


def terminal_cost(n, cfg: MpcConfig) -> float:
    """Quadratic penalty on the projective distance to the target."""
    return cfg.terminal_weight * fs_distance(n, cfg.target) ** 2


def _terminal_residual_term(n: np.ndarray, cfg: MpcConfig) -> np.ndarray:
    # n x grad(Phi) with grad(Phi) = -alpha * theta/(2 sin theta) * target
    theta = geodesic_distance(unit_vector(n), cfg.target)
    if theta > np.pi - 1e-9:
        raise GradientSingularity("terminal cost gradient undefined opposite the target")
    if theta < 1e-6:
        coeff = 1.0 + theta**2 / 6.0
    else:
        coeff = theta / np.sin(theta)
    return -0.5 * cfg.terminal_weight * coeff * np.cross(n, cfg.target)


def apply_perturbation(n, axis, angle: float) -> np.ndarray:
    """Rotate a state about ``axis`` by ``angle`` (Rodrigues, norm-preserving)."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValueError("perturbation axis must be nonzero")
    u = axis / norm
    n = np.asarray(n, dtype=float)
    return (
        np.cos(angle) * n
        + np.sin(angle) * np.cross(u, n)
        + (1.0 - np.cos(angle)) * (u @ n) * u
    )


def _lift_pair(current, h: float) -> tuple[np.ndarray, np.ndarray]:
    prev, curr = current
    prev = np.asarray(prev)
    if prev.shape == (2, 2):
        return np.asarray(prev, dtype=complex), np.asarray(curr, dtype=complex)
    u_prev = minimal_lift(prev)
    return u_prev, lift_step(u_prev, unit_vector(curr), h)[1]


def _cold_start(
    u_prev: np.ndarray, u_curr: np.ndarray, target: np.ndarray, n_points: int, h: float
) -> np.ndarray:
    """Geodesic interpolation from the current state toward the target.

    Falls back to continuing the current motion when the target is
    (nearly) antipodal to the current state.
    """
    U = np.empty((n_points, 2, 2), dtype=complex)
    U[0], U[1] = u_prev, u_curr
    n_curr = project_bloch(u_curr)
    try:
        for k in range(2, n_points):
            aim = slerp(n_curr, target, (k - 1) / (n_points - 2))
            U[k] = lift_step(U[k - 1], aim, h)[1]
    except AntipodalPoints:
        W = u_prev.conj().T @ u_curr
        for k in range(2, n_points):
            U[k] = U[k - 1] @ W
    return U


def _detour_start(
    u_prev: np.ndarray,
    u_curr: np.ndarray,
    cfg: "MpcConfig",
    n_points: int,
    h: float,
) -> Optional[np.ndarray]:
    """Two-leg interpolation around the nearest blocking obstacle center.

    Returns None when the straight interpolation never enters a cap, or
    when the geometry is too degenerate to pick a side.
    """
    if cfg.obstacle is None:
        return None
    n_curr = project_bloch(u_curr)
    path = [slerp(n_curr, cfg.target, s) for s in np.linspace(0.0, 1.0, n_points - 1)]
    blocking = None
    for c in cfg.obstacle.centers:
        if any(geodesic_distance(p, c) < cfg.obstacle.d_radius for p in path):
            blocking = c
            break
    if blocking is None:
        return None
    mid = path[len(path) // 2]
    side = mid - (mid @ blocking) * blocking
    if np.linalg.norm(side) < 1e-8:
        side = np.cross(blocking, n_curr)
    if np.linalg.norm(side) < 1e-8:
        return None
    side = side / np.linalg.norm(side)
    alpha = min(cfg.obstacle.d_radius + 0.4, 0.5 * np.pi)
    waypoint = unit_vector(np.cos(alpha) * blocking + np.sin(alpha) * side)
    d1 = geodesic_distance(n_curr, waypoint)
    d2 = geodesic_distance(waypoint, cfg.target)
    split = max(2, min(n_points - 2, round((n_points - 2) * d1 / (d1 + d2 + 1e-12))))
    U = np.empty((n_points, 2, 2), dtype=complex)
    U[0], U[1] = u_prev, u_curr
    try:
        for k in range(2, n_points):
            if k - 1 <= split:
                aim = slerp(n_curr, waypoint, (k - 1) / split)
            else:
                aim = slerp(waypoint, cfg.target, (k - 1 - split) / (n_points - 2 - split))
            U[k] = lift_step(U[k - 1], aim, h)[1]
    except AntipodalPoints:
        return None
    return U


def _solve_free_horizon(
    U_init: np.ndarray,
    cfg: MpcConfig,
    h: float,
    tol: float,
    max_iterations: int,
) -> tuple[np.ndarray, SolverReport]:
    P = len(U_init)
    free = np.arange(2, P)
    U, iterations, res_norm, converged, message = solve_stationary(
        U_init,
        h,
        cfg.obstacle,
        free,
        terminal_grad=lambda n: _terminal_residual_term(n, cfg),
        terminal_value=lambda n: terminal_cost(n, cfg),
        tol=tol,
        max_iterations=max_iterations,
    )
    U[free] = unitarize(U[free])
    traj = DiscreteTrajectory.from_unitaries(U, h)
    report = SolverReport(
        iterations=iterations,
        residual_norm=res_norm,
        action=_action(U, h, cfg.obstacle, terminal_value=lambda n: terminal_cost(n, cfg)),
        converged=converged,
        momentum_jz=discrete_momentum_jz(traj),
        message=message,
    )
    return U, report


def solve_horizon(
    current,
    cfg: MpcConfig,
    warm: Optional[DiscreteTrajectory] = None,
    tol: float = 1e-9,
    max_iterations: int = 200,
    horizon_steps: Optional[int] = None,
) -> HorizonSolution:
    """Solve one finite-horizon problem from the pinned state pair.

    ``current`` is (previous point, current point), as state vectors or as
    already-lifted unitaries.  A warm start is tried first; on failure the
    solve is repeated from the geodesic-continuation cold start, and only
    if that fails too is :class:`HorizonInfeasible` raised.
    """
    h = cfg.sample_h
    n_p = cfg.horizon_steps if horizon_steps is None else horizon_steps
    P = n_p + 2
    u_prev, u_curr = _lift_pair(current, h)

    cold = _cold_start(u_prev, u_curr, cfg.target, P, h)

    def attempt_starts():
        if warm is not None:
            W = np.array(
                warm.unitaries if isinstance(warm, DiscreteTrajectory) else warm,
                dtype=complex,
            )
            if len(W) == P:
                W[0], W[1] = u_prev, u_curr
                yield W
        yield cold
        if cfg.obstacle is not None:
            # barrier continuation: plan without the barrier, restart from it
            flat_plan, rep_flat = _solve_free_horizon(
                cold, replace(cfg, obstacle=None), h, tol, max_iterations
            )
            if rep_flat.converged:
                yield flat_plan
            detour = _detour_start(u_prev, u_curr, cfg, P, h)
            if detour is not None:
                # the straight plan crosses a cap: start in the class that
                # bends around the blocking center
                yield detour

    last_report = None
    for U_init in attempt_starts():
        U, report = _solve_free_horizon(U_init, cfg, h, tol, max_iterations)
        last_report = report
        if report.converged:
            traj = DiscreteTrajectory.from_unitaries(U, h)
            return HorizonSolution(
                trajectory=traj,
                predicted=traj.bloch[1:],
                value=report.action,
                stage_cost=discrete_lagrangian(U[0], U[1], U[2], cfg.obstacle, h),
                report=report,
            )
    raise HorizonInfeasible(
        f"horizon solve failed from all starts: {last_report.message}"
    )


def mpc_step(state: MpcLoopState, cfg: MpcConfig) -> tuple[np.ndarray, MpcLoopState]:
    """Solve, apply the first predicted segment, shift the warm start."""
    sol = solve_horizon((state.u_prev, state.u_curr), cfg, warm=state.warm)
    U = sol.trajectory.unitaries
    shifted = np.concatenate([U[1:], U[-1:]], axis=0)
    new_state = MpcLoopState(u_prev=U[1], u_curr=U[2], warm=shifted, solution=sol)
    return sol.predicted[1], new_state


def _normalize_perturbations(perturbations) -> list[Perturbation]:
    out = []
    for p in perturbations:
        if isinstance(p, Perturbation):
            out.append(p)
        else:
            step, axis, angle = p
            out.append(Perturbation(int(step), np.asarray(axis, dtype=float), float(angle)))
    return out


def _kick(state: MpcLoopState, pert: Perturbation) -> MpcLoopState:
    # rotate the whole pinned pair: position jumps, body velocity carries over
    G = su2_exp(pert.angle * np.asarray(pert.axis) / np.linalg.norm(pert.axis))
    return MpcLoopState(
        u_prev=G @ state.u_prev,
        u_curr=G @ state.u_curr,
        warm=None if state.warm is None else G @ state.warm,
        solution=state.solution,
    )


def run_closed_loop(cfg: MpcConfig, start, perturbations=()) -> ClosedLoopLog:
    """Receding-horizon loop: re-solve, apply one segment, repeat.

    ``start`` is a single state (taken at rest) or a (previous, current)
    pair encoding an initial velocity.
    """
    events = _normalize_perturbations(perturbations)
    start = np.asarray(start, dtype=float)
    if start.ndim == 1:
        u0 = minimal_lift(start)
        state = MpcLoopState(u_prev=u0, u_curr=u0.copy())
    else:
        u_prev, u_curr = _lift_pair((start[0], start[1]), cfg.sample_h)
        state = MpcLoopState(u_prev=u_prev, u_curr=u_curr)

    executed = [project_bloch(state.u_curr)]
    lifted = [state.u_curr]
    values, stages, reports, logged = [], [], [], []
    for step in range(cfg.total_steps):
        for pert in events:
            if pert.step == step:
                state = _kick(state, pert)
                executed[-1] = project_bloch(state.u_curr)
                lifted[-1] = state.u_curr
                logged.append((step, pert.axis, pert.angle))
        applied, state = mpc_step(state, cfg)
        executed.append(applied)
        lifted.append(state.u_curr)
        values.append(state.solution.value)
        stages.append(state.solution.stage_cost)
        reports.append(state.solution.report)
    return ClosedLoopLog(
        executed=np.stack(executed),
        value_function=np.array(values),
        stage_costs=np.array(stages),
        horizon_reports=reports,
        perturbation_events=logged,
        executed_unitaries=np.stack(lifted),
    )


def run_open_loop(cfg: MpcConfig, start, perturbations=()) -> ClosedLoopLog:
    """Plan once over the whole task, then replay without correction.

    The single solve spans ``total_steps`` segments with the same terminal
    penalty.  Perturbations rotate the executed state; because the replay
    applies the planned body-frame increments, the rotation persists for
    the rest of the run.
    """
    events = _normalize_perturbations(perturbations)
    start = np.asarray(start, dtype=float)
    if start.ndim == 1:
        u0 = minimal_lift(start)
        u_prev, u_curr = u0, u0.copy()
    else:
        u_prev, u_curr = _lift_pair((start[0], start[1]), cfg.sample_h)

    sol = solve_horizon((u_prev, u_curr), cfg, warm=None,
                        horizon_steps=cfg.total_steps)
    U = sol.trajectory.unitaries
    h = cfg.sample_h
    lagr = [
        discrete_lagrangian(U[k - 1], U[k], U[k + 1], cfg.obstacle, h)
        for k in range(1, cfg.total_steps + 1)
    ]
    terminal = terminal_cost(sol.predicted[-1], cfg)

    executed = [project_bloch(u_curr)]
    lifted = [u_curr]
    values, stages, logged = [], [], []
    G = np.eye(2, dtype=complex)
    for step in range(cfg.total_steps):
        for pert in events:
            if pert.step == step:
                G = su2_exp(pert.angle * np.asarray(pert.axis) / np.linalg.norm(pert.axis)) @ G
                executed[-1] = project_bloch(G @ U[step + 1])
                lifted[-1] = G @ U[step + 1]
                logged.append((step, pert.axis, pert.angle))
        executed.append(project_bloch(G @ U[step + 2]))
        lifted.append(G @ U[step + 2])
        values.append(float(sum(lagr[step:]) + terminal))
        stages.append(lagr[step])
    return ClosedLoopLog(
        executed=np.stack(executed),
        value_function=np.array(values),
        stage_costs=np.array(stages),
        horizon_reports=[sol.report],
        perturbation_events=logged,
        executed_unitaries=np.stack(lifted),
    )


def descent_violations(log: ClosedLoopLog) -> np.ndarray:
    """Per-step Lyapunov defects ``J*_{k+1} - J*_k + stage_k``."""
    J = log.value_function
    return J[1:] - J[:-1] + log.stage_costs[:-1]
