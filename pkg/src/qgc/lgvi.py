"""Discrete variational solver for smooth trajectories on the lifted group.

The discrete cost over points ``U_0..U_K`` is

    sum_{k=1}^{K-1}  (h/2) |(w_k - w_{k-1})/h|^2  +  h V(n_k),

with ``w_k`` the Cayley coordinate of the increment ``U_k^* U_{k+1}`` and
``n_k`` the projected state.  ``del_residual`` is the exact gradient of
this sum with respect to a left perturbation ``exp(eps e) U_k``; the
retraction's chart factors (a scalar ``1 + |h w/4|^2`` and a half-angle
rotation) are kept, which is what lets the residual agree with finite
differences of the action to full precision rather than to O(h^2).

Stationarity of the same sum with one or both right-hand points released
(free terminal velocity, or a fully free endpoint with a terminal cost)
reuses the identical kinetic structure, so all boundary modes share one
assembler and one damped-Newton driver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ChartOverflow, GradientSingularity
from .potentials import ObstacleSpec, potential_gradient_many, potential_value_many
from .sphere import exp_map, slerp, unit_vector
from .su2 import (
    EZ,
    cayley,
    inverse_cayley,
    lift_step,
    minimal_lift,
    project_bloch,
    rotation_matrix,
    su2_exp,
    unitarize,
)

_EYE3 = np.eye(3)
_FD_STEP = 1e-7


@dataclass(frozen=True)
class BoundaryData:
    """Fixed endpoint pairs; ``u_km1 = None`` releases the end velocity."""

    u0: np.ndarray
    u1: np.ndarray
    u_km1: Optional[np.ndarray]
    uk: np.ndarray

    def __post_init__(self):
        if float(project_bloch(self.u0) @ project_bloch(self.u1)) <= -1.0 + 1e-9:
            raise ValueError("initial pair projects to antipodal states")
        if self.u_km1 is not None:
            if float(project_bloch(self.u_km1) @ project_bloch(self.uk)) <= -1.0 + 1e-9:
                raise ValueError("terminal pair projects to antipodal states")


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    residual_norm: float
    action: float
    converged: bool
    momentum_jz: np.ndarray
    message: str = ""
    action_history: tuple = ()


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Solved (or candidate) discrete path with cached projections."""

    h: float
    unitaries: np.ndarray
    generators: np.ndarray
    bloch: np.ndarray

    @staticmethod
    def from_unitaries(U, h: float) -> "DiscreteTrajectory":
        U = np.asarray(U, dtype=complex)
        W = np.einsum("kji,kjl->kil", U[:-1].conj(), U[1:])
        return DiscreteTrajectory(
            h=float(h),
            unitaries=U,
            generators=inverse_cayley(W, h),
            bloch=project_bloch(U),
        )

    def __len__(self) -> int:
        return len(self.unitaries)


def boundary_from_states(n0, v0, nK, vK=None, h: float = 0.01) -> BoundaryData:
    """Encode smooth boundary data as fixed unitary pairs.

    The start pair puts ``U_1`` one geodesic step ``h*v0`` ahead of ``n0``.
    ``vK=None`` leaves the terminal velocity free; otherwise the last pair
    is built so the final increment represents ``h*vK``.
    """
    n0 = unit_vector(n0)
    nK = unit_vector(nK)
    u0 = minimal_lift(n0)
    u1 = lift_step(u0, exp_map(n0, h * np.asarray(v0, dtype=float)), h)[1]
    uk = minimal_lift(nK)
    if vK is None:
        return BoundaryData(u0=u0, u1=u1, u_km1=None, uk=uk)
    n_prev = exp_map(nK, -h * np.asarray(vK, dtype=float))
    m = rotation_matrix(uk).T @ n_prev
    axis = np.cross(m, EZ)
    norm = np.linalg.norm(axis)
    if norm < 1e-15:
        u_km1 = uk.copy()
    else:
        angle = float(np.arccos(np.clip(m @ EZ, -1.0, 1.0)))
        omega_end = (4.0 / h) * np.tan(0.25 * angle) * axis / norm
        u_km1 = uk @ cayley(-omega_end, h)
    return BoundaryData(u0=u0, u1=u1, u_km1=u_km1, uk=uk)


def _skew(b: np.ndarray) -> np.ndarray:
    out = np.zeros(b.shape[:-1] + (3, 3))
    out[..., 0, 1] = -b[..., 2]
    out[..., 0, 2] = b[..., 1]
    out[..., 1, 0] = b[..., 2]
    out[..., 1, 2] = -b[..., 0]
    out[..., 2, 0] = -b[..., 1]
    out[..., 2, 1] = b[..., 0]
    return out


def _kinematics(U: np.ndarray, h: float):
    W = np.einsum("kji,kjl->kil", U[:-1].conj(), U[1:])
    omega = inverse_cayley(W, h)
    mu = np.diff(omega, axis=0) / h  # mu[i] corresponds to index i+1
    return omega, mu


def _transfer_matrices(U: np.ndarray, omega: np.ndarray, h: float) -> np.ndarray:
    # M_m = (1 + beta_m) R(U_m) S(w_m): rotation of the midpoint configuration
    # times the Cayley chart scalar, written division-free.
    b = 0.25 * h * omega
    beta = np.sum(b * b, axis=-1)
    core = (
        (1.0 - beta)[:, None, None] * _EYE3
        + 2.0 * b[:, :, None] * b[:, None, :]
        + 2.0 * _skew(b)
    )
    return rotation_matrix(U[:-1]) @ core


def _residuals(
    U: np.ndarray,
    h: float,
    spec: Optional[ObstacleSpec],
    rows: np.ndarray,
    terminal_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Stacked action gradient at the requested node indices."""
    P = len(U)
    omega, mu = _kinematics(U, h)
    M = _transfer_matrices(U, omega, h)
    p = np.zeros_like(omega)
    p[1 : P - 2] = mu[: P - 3] - mu[1 : P - 2]
    p[P - 2] = mu[P - 3]
    bloch = project_bloch(U)

    out = np.empty((len(rows), 3))
    interior = rows <= P - 2
    ji = rows[interior]
    g = (
        np.einsum("kij,kj->ki", M[ji - 1], p[ji - 1])
        - np.einsum("kij,kj->ki", M[ji], p[ji])
    ) / h
    if spec is not None:
        grads = potential_gradient_many(spec, bloch[ji])
        g = g + h * np.cross(bloch[ji], grads)
    out[interior] = g
    if np.any(~interior):
        # single free terminal node: only the last increment and the
        # terminal cost act on it
        j = P - 1
        g_term = (M[j - 1] @ p[j - 1]) / h
        if terminal_grad is not None:
            g_term = g_term + terminal_grad(bloch[j])
        out[~interior] = g_term
    return out


def _action(
    U: np.ndarray,
    h: float,
    spec: Optional[ObstacleSpec],
    terminal_value: Optional[Callable[[np.ndarray], float]] = None,
) -> float:
    P = len(U)
    _, mu = _kinematics(U, h)
    S = 0.5 * h * float(np.sum(mu * mu))
    if spec is not None:
        bloch = project_bloch(U[1 : P - 1])
        S += h * float(np.sum(potential_value_many(spec, bloch)))
    if terminal_value is not None:
        S += float(terminal_value(project_bloch(U[P - 1])))
    return S


def discrete_lagrangian(Ua, Ub, Uc, spec: Optional[ObstacleSpec], h: float) -> float:
    """One discrete cost term: squared increment difference plus h V."""
    wa = inverse_cayley(np.asarray(Ua).conj().T @ Ub, h)
    wb = inverse_cayley(np.asarray(Ub).conj().T @ Uc, h)
    mu = (wb - wa) / h
    value = 0.5 * h * float(mu @ mu)
    if spec is not None:
        value += h * float(potential_value_many(spec, project_bloch(np.asarray(Ub))[None])[0])
    return value


def del_residual(window, spec: Optional[ObstacleSpec], h: float) -> np.ndarray:
    """Exact stationarity residual at the middle of five consecutive points."""
    U = np.stack([np.asarray(w, dtype=complex) for w in window])
    if len(U) != 5:
        raise ValueError("del_residual expects a window of five unitaries")
    return _residuals(U, h, spec, np.array([2]))[0]


def discrete_action(traj: DiscreteTrajectory, spec: Optional[ObstacleSpec]) -> float:
    """Sum of the discrete cost over all interior triples."""
    return _action(traj.unitaries, traj.h, spec)


def discrete_momentum_jz(traj: DiscreteTrajectory) -> np.ndarray:
    """Axial components of the discrete momenta, one per interior index."""
    if len(traj.generators) < 2:
        raise ValueError("need at least two increments")
    return (np.diff(traj.generators, axis=0) / traj.h)[:, 2]


def _vectorial_residual(omega, mu, bloch, grads, k: int) -> np.ndarray:
    # small-step form: cheap relaxation direction only, not the exact gradient
    r = (mu[k + 1] - mu[k]) + np.cross(omega[k], mu[k])
    if grads is not None:
        r = r + np.cross(bloch[k], grads[k])
    return r


def gauss_seidel_sweeps(
    U: np.ndarray,
    h: float,
    spec: Optional[ObstacleSpec],
    free: np.ndarray,
    sweeps: int = 3,
    damping: float = 0.7,
) -> np.ndarray:
    """Relaxation sweeps driven by the small-step residual.

    Used as a fallback smoother when the Newton line search stalls; it
    reduces the residual linearly but cannot reach tight tolerances on its
    own (the update direction drops the chart factors).
    """
    U = U.copy()
    P = len(U)
    for _ in range(sweeps):
        for k in free:
            if k < 2 or k > P - 3:
                continue
            omega, mu_arr = _kinematics(U, h)
            mu = np.concatenate([np.zeros((1, 3)), mu_arr])  # mu[k] = mu_k
            bloch = project_bloch(U)
            grads = potential_gradient_many(spec, bloch) if spec is not None else None
            r = _vectorial_residual(omega, mu, bloch, grads, k)
            a = -(h * h / 3.0) * r
            U[k] = su2_exp(damping * (rotation_matrix(U[k]) @ a)) @ U[k]
    return U


def solve_stationary(
    U_init: np.ndarray,
    h: float,
    spec: Optional[ObstacleSpec],
    free: np.ndarray,
    terminal_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    terminal_value: Optional[Callable[[np.ndarray], float]] = None,
    tol: float = 1e-9,
    max_iterations: int = 200,
    max_halvings: int = 50,
    action_trace: Optional[list] = None,
) -> tuple[np.ndarray, int, float, bool, str]:
    """Damped Newton on the stacked residual with Armijo backtracking.

    Forward-difference Jacobian in the ``3 * len(free)`` tangent
    coordinates; trial steps that leave the retraction chart or hit a
    gradient singularity are rejected by the line search.  Returns the
    final points, iteration count, residual norm, convergence flag and a
    diagnostic message.  ``action_trace``, if given, collects the cost of
    every accepted iterate.
    """
    U = np.array(U_init, dtype=complex)
    rows = np.asarray(free, dtype=int)

    def residual(Ucur):
        return _residuals(Ucur, h, spec, rows, terminal_grad)

    def record(Ucur):
        if action_trace is not None:
            action_trace.append(_action(Ucur, h, spec, terminal_value))

    r = residual(U)
    record(U)
    res_norm = float(np.max(np.linalg.norm(r, axis=1)))
    phi = 0.5 * float(np.sum(r * r))
    iterations = 0
    message = ""
    stalls = 0

    def line_search(delta, halvings):
        nonlocal U, r, phi
        t = 1.0
        for _ in range(halvings):
            Utrial = U.copy()
            for ci, k in enumerate(rows):
                Utrial[k] = su2_exp(t * delta[3 * ci : 3 * ci + 3]) @ U[k]
            try:
                rt = residual(Utrial)
            except (ChartOverflow, GradientSingularity):
                t *= 0.5
                continue
            phit = 0.5 * float(np.sum(rt * rt))
            if phit <= (1.0 - 2e-4 * t) * phi:
                U, r, phi = Utrial, rt, phit
                record(U)
                return True, t
            t *= 0.5
        return False, 0.0

    creep = 0
    slow = 0
    while res_norm > tol and iterations < max_iterations:
        phi_before = phi
        J = np.empty((r.size, 3 * len(rows)))
        for ci, k in enumerate(rows):
            for ax in range(3):
                step = np.zeros(3)
                step[ax] = _FD_STEP
                Up = U.copy()
                Up[k] = su2_exp(step) @ U[k]
                J[:, 3 * ci + ax] = (residual(Up) - r).ravel() / _FD_STEP
        try:
            delta = np.linalg.solve(J, -r.ravel())
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(J, -r.ravel(), rcond=None)[0]
        accepted, t_used = line_search(delta, max_halvings)
        # microscopic accepted steps mean the iteration is creeping along a
        # (near-)singular valley of the residual map: treat like a stall
        creep = creep + 1 if (accepted and t_used < 1e-5) else 0
        if not accepted or creep >= 3:
            # re-damp the Newton system toward steepest descent; the pure
            # direction stops descending inside stiff barrier walls and at
            # rank-deficient points
            creep = 0
            JTJ = J.T @ J
            g = J.T @ r.ravel()
            lam = 1e-3 * float(np.trace(JTJ)) / JTJ.shape[0] + 1e-30
            eye = np.eye(JTJ.shape[0])
            accepted = False
            for _ in range(10):
                delta = np.linalg.solve(JTJ + lam * eye, -g)
                ok, t_used = line_search(delta, 12)
                if ok and t_used >= 1e-5:
                    accepted = True
                    break
                lam *= 10.0
        iterations += 1
        if not accepted:
            stalls += 1
            Us = gauss_seidel_sweeps(U, h, spec, rows, sweeps=5)
            try:
                rs = residual(Us)
            except (ChartOverflow, GradientSingularity):
                rs = None
            if rs is not None and 0.5 * float(np.sum(rs * rs)) < 0.99 * phi:
                U, r = Us, rs
                phi = 0.5 * float(np.sum(r * r))
                record(U)
            elif stalls >= 2:
                message = "line search stalled"
                break
        # an iteration that barely moves the merit is stagnation even when
        # formally accepted; a dozen of them in a row will not recover
        slow = slow + 1 if phi > 0.999 * phi_before else 0
        if slow >= 12:
            message = "stagnated at a non-stationary point"
            break
        res_norm = float(np.max(np.linalg.norm(r, axis=1)))
    converged = res_norm <= tol
    if not converged and not message:
        message = "max iterations exceeded"
    return U, iterations, res_norm, converged, message


def geodesic_initialization(U: np.ndarray, h: float, free: np.ndarray) -> np.ndarray:
    """Fill the free nodes by interpolating between the inner fixed states.

    Interior states follow the great-circle arc between the projections of
    the second point and the last fixed point, lifted sequentially with
    minimal-norm increments.
    """
    U = U.copy()
    P = len(U)
    lo = int(free[0])
    hi = int(free[-1])
    if hi + 1 > P - 1:
        raise ValueError("interpolation needs a fixed anchor after the free range")
    n_a = project_bloch(U[lo - 1])
    anchor = hi + 1
    n_b = project_bloch(U[anchor])
    span = anchor - (lo - 1)
    for k in range(lo, hi + 1):
        target = slerp(n_a, n_b, (k - (lo - 1)) / span)
        U[k] = lift_step(U[k - 1], target, h)[1]
    return U


def solve_bvp(
    boundary: BoundaryData,
    K: int,
    spec: Optional[ObstacleSpec],
    h: float,
    init: Optional[DiscreteTrajectory] = None,
    tol: float = 1e-9,
    max_iterations: int = 200,
) -> tuple[DiscreteTrajectory, SolverReport]:
    """Solve the two-pair boundary problem on ``K`` steps.

    With ``boundary.u_km1 = None`` the terminal velocity is free (only the
    final point is pinned).  Returns the best iterate and a report; a
    non-converged solve is reported, not raised.
    """
    if K < 5:
        raise ValueError("K must be at least 5")
    P = K + 1
    fixed_right = 1 if boundary.u_km1 is None else 2
    free = np.arange(2, P - fixed_right)
    if init is not None:
        if len(init.unitaries) != P:
            raise ValueError("warm start has the wrong number of points")
        U = np.array(init.unitaries, dtype=complex)
    else:
        U = np.zeros((P, 2, 2), dtype=complex)
    U[0] = boundary.u0
    U[1] = boundary.u1
    U[P - 1] = boundary.uk
    if fixed_right == 2:
        U[P - 2] = boundary.u_km1
    if init is None:
        U = geodesic_initialization(U, h, free)
    trace: list = []
    U_solved, iterations, res_norm, converged, message = solve_stationary(
        U, h, spec, free, tol=tol, max_iterations=max_iterations, action_trace=trace
    )
    if not converged and spec is not None and init is None:
        # barrier continuation: the interpolated start can sit in the wrong
        # basin of the forced problem; the barrier-free solution usually
        # does not, so solve that first and restart from it
        U_flat, _, _, flat_ok, _ = solve_stationary(
            U, h, None, free, tol=tol, max_iterations=max_iterations
        )
        if flat_ok:
            U_retry, it2, res2, conv2, msg2 = solve_stationary(
                U_flat, h, spec, free, tol=tol, max_iterations=max_iterations,
                action_trace=trace,
            )
            if res2 < res_norm:
                U_solved, res_norm, converged, message = U_retry, res2, conv2, msg2
            iterations += it2
    U = U_solved
    U[free] = unitarize(U[free])
    traj = DiscreteTrajectory.from_unitaries(U, h)
    report = SolverReport(
        iterations=iterations,
        residual_norm=res_norm,
        action=_action(U, h, spec),
        converged=converged,
        momentum_jz=discrete_momentum_jz(traj),
        message=message,
        action_history=tuple(trace),
    )
    return traj, report
