"""Intrinsic geometry of the unit sphere with the round metric.

All points and tangent vectors are plain ``numpy`` arrays of shape (3,).
Points are renormalized once, at construction (``bloch_vector`` /
``unit_vector``); the remaining operations assume unit inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntipodalPoints, InconsistentJet

# Dot products this close to -1 count as antipodal for log/slerp purposes.
ANTIPODAL_CUTOFF = 1e-9
# Below this angle the sinc-type coefficients switch to their series.
SMALL_ANGLE = 1e-6


def bloch_vector(x: float, y: float, z: float) -> np.ndarray:
    """Build a unit state vector, renormalizing the given components."""
    return unit_vector(np.array([x, y, z], dtype=float))


def unit_vector(v) -> np.ndarray:
    """Renormalize ``v`` onto the sphere; reject (near-)zero input."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError("cannot normalize a zero vector onto the sphere")
    return v / norm


@dataclass(frozen=True)
class TangentVector:
    """A vector ``vec`` attached to the tangent plane at ``base``."""

    base: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float))
        if abs(float(self.base @ self.vec)) > 1e-12 * max(1.0, float(np.linalg.norm(self.vec))):
            raise InconsistentJet("tangent vector is not orthogonal to its base point")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


@dataclass(frozen=True)
class AugmentedState:
    """Position with its first three time derivatives ``(n, v, a, j)``.

    Construction does not validate the constraint identities (integrators
    deliberately produce slightly drifted states); call :meth:`check` to
    enforce them.
    """

    n: np.ndarray
    v: np.ndarray
    a: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        for name in ("n", "v", "a", "j"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def check(self, tol_v: float = 1e-10, tol_a: float = 1e-8) -> None:
        """Raise :class:`InconsistentJet` if the jet identities fail."""
        if abs(float(self.n @ self.v)) > tol_v:
            raise InconsistentJet(f"n.v = {float(self.n @ self.v):.3e} exceeds {tol_v:.1e}")
        if abs(float(self.n @ self.a + self.v @ self.v)) > tol_a:
            raise InconsistentJet(
                f"n.a + |v|^2 = {float(self.n @ self.a + self.v @ self.v):.3e} exceeds {tol_a:.1e}"
            )

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.n, self.v, self.a, self.j])

    @staticmethod
    def from_vector(y: np.ndarray) -> "AugmentedState":
        y = np.asarray(y, dtype=float)
        return AugmentedState(y[0:3], y[3:6], y[6:9], y[9:12])


def project_tangent(n: np.ndarray, w) -> np.ndarray:
    """Project ``w`` onto the tangent plane at ``n`` (kills the normal part)."""
    w = np.asarray(w, dtype=float)
    return w - (n @ w) * n


def geodesic_distance(n: np.ndarray, m: np.ndarray) -> float:
    """Great-circle angle between two unit vectors, in [0, pi]."""
    return float(np.arccos(np.clip(n @ m, -1.0, 1.0)))


def exp_map(n: np.ndarray, v) -> np.ndarray:
    """Follow the geodesic from ``n`` with initial velocity ``v`` for unit time."""
    if isinstance(v, TangentVector):
        v = v.vec
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v)
    if theta < SMALL_ANGLE:
        # sin(t)/t and cos expanded to second order; exact at v = 0
        out = (1.0 - theta**2 / 2.0) * n + (1.0 - theta**2 / 6.0) * v
    else:
        out = np.cos(theta) * n + np.sin(theta) * (v / theta)
    return unit_vector(out)


def log_map(n: np.ndarray, m: np.ndarray) -> TangentVector:
    """Tangent vector at ``n`` whose geodesic reaches ``m`` at unit time."""
    u = float(np.clip(n @ m, -1.0, 1.0))
    if u <= -1.0 + ANTIPODAL_CUTOFF:
        raise AntipodalPoints("log map is undefined for antipodal points")
    theta = np.arccos(u)
    rej = m - u * n
    if theta < SMALL_ANGLE:
        # theta/sin(theta) -> 1; rejection itself is O(theta)
        coeff = 1.0 + theta**2 / 6.0
    else:
        coeff = theta / np.sin(theta)
    return TangentVector(n, project_tangent(n, coeff * rej))


def covariant_acceleration(n: np.ndarray, v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Tangential part of the second derivative along a sphere curve."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    if abs(float(n @ v)) > 1e-6 or abs(float(n @ a + v @ v)) > 1e-6:
        raise InconsistentJet("(n, v, a) does not satisfy the sphere curve identities")
    return a + (v @ v) * n


def curvature_op(a, b, c) -> np.ndarray:
    """Curvature operator of the round sphere: R(a,b)c = (b.c)a - (a.c)b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    return (b @ c) * a - (a @ c) * b


def slerp(n0: np.ndarray, n1: np.ndarray, t: float) -> np.ndarray:
    """Constant-speed great-circle arc from ``n0`` (t=0) to ``n1`` (t=1)."""
    u = float(np.clip(n0 @ n1, -1.0, 1.0))
    if u <= -1.0 + ANTIPODAL_CUTOFF:
        raise AntipodalPoints("slerp is undefined for antipodal endpoints")
    theta = np.arccos(u)
    if theta < SMALL_ANGLE:
        return unit_vector((1.0 - t) * n0 + t * n1)
    s = np.sin(theta)
    return unit_vector((np.sin((1.0 - t) * theta) / s) * n0 + (np.sin(t * theta) / s) * n1)
