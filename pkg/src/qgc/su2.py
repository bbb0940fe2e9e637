"""SU(2) lift of the sphere: unitaries, algebra coordinates, retraction.

A group element is a 2x2 complex array ``U``; the algebra coordinate of
``X = -(i/2) w . sigma`` is the real 3-vector ``w``.  Internally everything
is routed through the quaternion components ``(s, v)`` of
``U = s*I - i (v . sigma)``, which batch cleanly over leading axes.

Conventions fixed here and verified by the conjugation tests:

* ``adjoint_rotate(U, x)`` is the right-handed rotation with
  ``U (x . sigma) U* = (Rx) . sigma``.
* The retraction ``cayley(w, h)`` rotates about ``w`` by ``4*atan(h|w|/4)``.
* The reference ray is the +z eigenstate, so ``project_bloch(I) = e_z``.
"""

from __future__ import annotations

import numpy as np

from .errors import AntipodalPoints, ChartOverflow, NonliftableStep
from .sphere import geodesic_distance, unit_vector

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

EZ = np.array([0.0, 0.0, 1.0])

# Increments whose rotation angle reaches this bound leave the chart.
CHART_LIMIT = np.pi - 1e-6


def su2_from_quat(s, v) -> np.ndarray:
    """Assemble ``s*I - i (v . sigma)`` (batched over leading axes)."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.empty(s.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = s - 1j * v[..., 2]
    out[..., 0, 1] = -v[..., 1] - 1j * v[..., 0]
    out[..., 1, 0] = v[..., 1] - 1j * v[..., 0]
    out[..., 1, 1] = s + 1j * v[..., 2]
    return out


def quat_from_su2(U) -> tuple[np.ndarray, np.ndarray]:
    """Extract quaternion components ``(s, v)`` from (batched) unitaries."""
    U = np.asarray(U, dtype=complex)
    s = 0.5 * (U[..., 0, 0] + U[..., 1, 1]).real
    v = np.stack(
        [
            -0.5 * (U[..., 0, 1] + U[..., 1, 0]).imag,
            0.5 * (U[..., 1, 0] - U[..., 0, 1]).real,
            0.5 * (U[..., 1, 1] - U[..., 0, 0]).imag,
        ],
        axis=-1,
    )
    return s, v


def unitarize(U) -> np.ndarray:
    """Snap back to SU(2) by normalizing the quaternion components."""
    s, v = quat_from_su2(U)
    norm = np.sqrt(s**2 + np.sum(v**2, axis=-1))
    return su2_from_quat(s / norm, v / norm[..., None])


def su2_exp(w) -> np.ndarray:
    """Exponential of ``-(i/2) w . sigma``: rotation about ``w`` by ``|w|``."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    half = 0.5 * theta
    small = theta < 1e-12
    scale = np.where(small, 0.5, np.sin(half) / np.where(small, 1.0, theta))
    return su2_from_quat(np.cos(half), scale[..., None] * w)


def cayley(omega, h: float) -> np.ndarray:
    """Cayley retraction of the scaled generator ``h * omega`` into SU(2)."""
    b = 0.25 * h * np.asarray(omega, dtype=float)
    beta = np.sum(b**2, axis=-1)
    return su2_from_quat((1.0 - beta) / (1.0 + beta), 2.0 * b / (1.0 + beta)[..., None])


def inverse_cayley(W, h: float) -> np.ndarray:
    """Algebra coordinate of an increment; raises once outside the chart."""
    s, v = quat_from_su2(W)
    norm = np.sqrt(s**2 + np.sum(v**2, axis=-1))
    s = s / norm
    v = v / norm[..., None]
    angle = 2.0 * np.arctan2(np.linalg.norm(v, axis=-1), s)
    if np.any(angle >= CHART_LIMIT):
        raise ChartOverflow(
            f"increment rotation angle {float(np.max(angle)):.6f} exceeds the chart limit"
        )
    return (4.0 / h) * v / (1.0 + s)[..., None]


def rotation_matrix(U) -> np.ndarray:
    """SO(3) matrix of the adjoint action of (batched) unitaries."""
    s, v = quat_from_su2(U)
    norm = np.sqrt(s**2 + np.sum(v**2, axis=-1))
    s = s / norm
    v = v / norm[..., None]
    sq = s**2 - np.sum(v**2, axis=-1)
    eye = np.zeros(np.shape(s) + (3, 3))
    eye[..., 0, 0] = eye[..., 1, 1] = eye[..., 2, 2] = sq
    outer = 2.0 * v[..., :, None] * v[..., None, :]
    skew = np.zeros_like(eye)
    skew[..., 0, 1] = -v[..., 2]
    skew[..., 0, 2] = v[..., 1]
    skew[..., 1, 0] = v[..., 2]
    skew[..., 1, 2] = -v[..., 0]
    skew[..., 2, 0] = -v[..., 1]
    skew[..., 2, 1] = v[..., 0]
    return eye + outer + 2.0 * s[..., None, None] * skew


def adjoint_rotate(U, x) -> np.ndarray:
    """Rotate a 3-vector by the adjoint action of ``U``."""
    return rotation_matrix(U) @ np.asarray(x, dtype=float)


def project_bloch(U) -> np.ndarray:
    """State vector reached from the +z reference ray: ``R(U) e_z``."""
    return rotation_matrix(U)[..., :, 2].copy()


def fs_distance(n, m) -> float:
    """Projective-space distance between two state vectors, in [0, pi/2]."""
    u = np.clip(np.asarray(n, float) @ np.asarray(m, float), -1.0, 1.0)
    overlap = np.sqrt(0.5 * (1.0 + u))
    return float(np.arccos(np.clip(overlap, 0.0, 1.0)))


def reconstruct(U0, omegas, h: float) -> np.ndarray:
    """Chain increments: ``U_{k+1} = U_k cayley(omega_k, h)``.

    Re-unitarizes every 100 compositions and once more at emission so long
    chains stay on the group to rounding accuracy.
    """
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    out = np.empty((len(omegas) + 1, 2, 2), dtype=complex)
    out[0] = U0
    for k, w in enumerate(omegas):
        out[k + 1] = out[k] @ cayley(w, h)
        if (k + 1) % 100 == 0:
            out[k + 1] = unitarize(out[k + 1])
    out[-1] = unitarize(out[-1])
    return out


def minimal_lift(n) -> np.ndarray:
    """Unitary of the smallest rotation taking e_z to ``n``.

    At the south pole the minimal rotation is not unique; the convention is
    a half-turn about +e_y.
    """
    n = unit_vector(n)
    c = float(n @ EZ)
    if c <= -1.0 + 1e-12:
        return su2_exp(np.pi * np.array([0.0, 1.0, 0.0]))
    axis = np.cross(EZ, n)
    norm = np.linalg.norm(axis)
    if norm < 1e-15:
        return IDENTITY.copy()
    return su2_exp(np.arccos(np.clip(c, -1.0, 1.0)) * axis / norm)


def lift_step(U_prev, n_next, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Extend a lift by the minimal-norm generator reaching ``n_next``.

    Returns ``(omega, U_next)`` with ``U_next = U_prev cayley(omega, h)``.
    """
    m = rotation_matrix(U_prev).T @ unit_vector(n_next)
    c = float(np.clip(m @ EZ, -1.0, 1.0))
    if c <= -1.0 + 1e-9:
        raise AntipodalPoints("consecutive lift points are antipodal")
    axis = np.cross(EZ, m)
    norm = np.linalg.norm(axis)
    if norm < 1e-15:
        omega = np.zeros(3)
    else:
        # Cayley step angle 4*atan(h|w|/4) must equal the great-circle angle.
        omega = (4.0 / h) * np.tan(0.25 * np.arccos(c)) * axis / norm
    return omega, U_prev @ cayley(omega, h)


def _step_residual(omega, omega_prev, U_prev, m_next, h, jz):
    W = cayley(omega, h)
    r_proj = rotation_matrix(W) @ EZ - m_next
    r_mom = (omega - omega_prev) @ EZ - h * jz
    return np.concatenate([r_proj, [r_mom]])


def _step_jacobian(omega, h):
    # d(R(W) e_z) = [C_R domega] x (R(W) e_z) with the chart factor C_R
    b = 0.25 * h * omega
    beta = b @ b
    K = np.array([[0.0, -b[2], b[1]], [b[2], 0.0, -b[0]], [-b[1], b[0], 0.0]])
    S = ((1.0 - beta) * np.eye(3) + 2.0 * np.outer(b, b) + 2.0 * K) / (1.0 + beta)
    CR = (h / (1.0 + beta)) * S
    w = rotation_matrix(cayley(omega, h)) @ EZ
    cross_w = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    J = np.empty((4, 3))
    J[:3] = -cross_w @ CR
    J[3] = EZ
    return J


def reconstruct_with_momentum(bloch_traj, jz: float, h: float) -> np.ndarray:
    """Lift a state path to unitaries with prescribed axial momentum.

    The first generator is the minimal-norm one (the momentum constraint
    starts at the second increment); each later generator solves the
    projection constraint together with
    ``(omega_k - omega_{k-1}) . e_z = h * jz`` by Gauss-Newton.
    """
    bloch = np.atleast_2d(np.asarray(bloch_traj, dtype=float))
    if len(bloch) < 2:
        raise ValueError("need at least two states to lift")
    U = [minimal_lift(bloch[0])]
    omegas = []
    for k in range(len(bloch) - 1):
        if float(bloch[k] @ bloch[k + 1]) <= -1.0 + 1e-9:
            raise AntipodalPoints("consecutive states are antipodal")
        if k == 0:
            omega, U_next = lift_step(U[0], bloch[1], h)
            omegas.append(omega)
            U.append(U_next)
            continue
        m_next = rotation_matrix(U[k]).T @ unit_vector(bloch[k + 1])
        omega_prev = omegas[-1]
        omega = lift_step(U[k], bloch[k + 1], h)[0]
        converged = False
        for _ in range(60):
            r = _step_residual(omega, omega_prev, U[k], m_next, h, jz)
            if np.linalg.norm(r) < 1e-12:
                converged = True
                break
            step = np.linalg.lstsq(_step_jacobian(omega, h), -r, rcond=None)[0]
            omega = omega + step
        if not converged and np.linalg.norm(
            _step_residual(omega, omega_prev, U[k], m_next, h, jz)
        ) > 1e-9:
            raise NonliftableStep(f"no generator found at step {k}")
        omegas.append(omega)
        U.append(unitarize(U[k] @ cayley(omega, h)))
    return np.stack(U)


__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY",
    "EZ",
    "su2_from_quat",
    "quat_from_su2",
    "unitarize",
    "su2_exp",
    "cayley",
    "inverse_cayley",
    "rotation_matrix",
    "adjoint_rotate",
    "project_bloch",
    "fs_distance",
    "reconstruct",
    "minimal_lift",
    "lift_step",
    "reconstruct_with_momentum",
    "geodesic_distance",
]
