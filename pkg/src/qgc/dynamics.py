"""Continuous smooth-trajectory dynamics on the augmented sphere state.

The fourth-order smoothness equation is carried as a first-order system on
``(n, v, a, j)``.  The tangential block comes from projecting the governing
equation; the normal component of the top derivative is completed from the
derivatives of ``|n|^2 = 1`` so the ambient twelve-dimensional field is
well-posed (exact solutions stay on the sphere, explicit integrators drift
by their local error only).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import StepCountOverflow
from .potentials import ObstacleSpec, potential_gradient
from .sphere import AugmentedState, project_tangent, unit_vector

MAX_STEPS = 10**7


@dataclass(frozen=True)
class CubicJetTrajectory:
    """A sampled augmented-state path with its step size and potential."""

    h: float
    states: Sequence[AugmentedState]
    potential: Optional[ObstacleSpec] = None

    def positions(self) -> np.ndarray:
        return np.stack([s.n for s in self.states])


def cubic_rhs(s: AugmentedState, spec: Optional[ObstacleSpec] = None):
    """Time derivative ``(v, a, j, F)`` of the augmented state.

    ``F`` solves the projected smoothness equation for the fourth
    derivative and restores the normal component implied by the unit
    constraint, ``n . n'''' = -(3|a|^2 + 4 v.j)``.
    """
    n, v, a, j = s.n, s.v, s.a, s.j
    forcing = 2.0 * (v @ v) * a + 4.0 * (v @ a) * v + (a @ a) * n
    if spec is not None:
        forcing = forcing + potential_gradient(spec, n)[0]
    F = -project_tangent(n, forcing) - (3.0 * (a @ a) + 4.0 * (v @ j)) * n
    return v, a, j, F


def _rhs_flat(y: np.ndarray, spec: Optional[ObstacleSpec]) -> np.ndarray:
    v, a, j, F = cubic_rhs(AugmentedState.from_vector(y), spec)
    return np.concatenate([v, a, j, F])


def rk4_integrate(
    s0: AugmentedState,
    spec: Optional[ObstacleSpec],
    T: float,
    h: float,
) -> CubicJetTrajectory:
    """Classical Runge-Kutta on the ambient system, deliberately unprojected.

    No renormalization is applied anywhere, so the drift of ``|n|`` away
    from one is an honest measure of the scheme's constraint violation.
    """
    if T <= 0 or h <= 0:
        raise ValueError("T and h must be positive")
    steps = round(T / h)
    if abs(steps * h - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of h")
    if steps > MAX_STEPS:
        raise StepCountOverflow(f"{steps} steps exceed the budget of {MAX_STEPS}")
    y = s0.as_vector()
    states = [s0]
    for _ in range(steps):
        k1 = _rhs_flat(y, spec)
        k2 = _rhs_flat(y + 0.5 * h * k1, spec)
        k3 = _rhs_flat(y + 0.5 * h * k2, spec)
        k4 = _rhs_flat(y + h * k3, spec)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(AugmentedState.from_vector(y))
    return CubicJetTrajectory(h=h, states=states, potential=spec)


def continuous_momentum_jz(s: AugmentedState) -> float:
    """Axial momentum of the smooth dynamics, conserved when the potential
    depends on ``n_z`` only.

    Pairs the (projected) third covariant derivative with the axial
    rotation field ``e_z x n`` and subtracts the acceleration paired with
    the (projected) derivative of that field.
    """
    n, v, a, j = s.n, s.v, s.a, s.j
    ez = np.array([0.0, 0.0, 1.0])
    first = project_tangent(n, j + 2.0 * (v @ a) * n + (v @ v) * v) @ np.cross(ez, n)
    second = (a + (v @ v) * n) @ project_tangent(n, np.cross(ez, v))
    return float(first - second)


def constraint_drift(traj: CubicJetTrajectory) -> np.ndarray:
    """Per-sample deviation ``| |n_k| - 1 |`` along a trajectory."""
    if not traj.states:
        raise ValueError("trajectory is empty")
    norms = np.linalg.norm(traj.positions(), axis=1)
    return np.abs(norms - 1.0)


def consistent_jet(n, v, a=None, j=None) -> AugmentedState:
    """Build an augmented state satisfying the constraint identities.

    ``v`` is projected tangent; the normal parts of ``a`` and ``j`` are
    overwritten with the values forced by ``|n| = 1`` (``n.a = -|v|^2``,
    ``n.j = -3 v.a``), keeping the given tangential parts.
    """
    n = unit_vector(n)
    v = project_tangent(n, np.asarray(v, dtype=float))
    a = np.zeros(3) if a is None else np.asarray(a, dtype=float)
    j = np.zeros(3) if j is None else np.asarray(j, dtype=float)
    a = project_tangent(n, a) - (v @ v) * n
    j = project_tangent(n, j) - 3.0 * (v @ a) * n
    return AugmentedState(n, v, a, j)
