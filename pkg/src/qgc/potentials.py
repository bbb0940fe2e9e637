"""Repulsive potentials that fence off regions of the state sphere.

Four variants share the parameters (tau, d_radius, sharpness):

* ``point``  -- rational barrier in the geodesic distance to one center
* ``cover``  -- sum of point barriers over a finite set of centers
* ``axial``  -- barrier in (1 - n_z), i.e. rotationally invariant about e_z;
  note the argument is the chordal height, not the geodesic angle, so the
  effective footprint differs from the point variant at equal d_radius
* ``bump``   -- compactly supported smooth bump inside the d_radius cap

Values and gradients are evaluated on the raw coordinates of ``n`` (the
natural smooth extension off the sphere), so central finite differences of
``potential_value`` reproduce the Euclidean gradient directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GradientSingularity
from .sphere import TangentVector, geodesic_distance, project_tangent, unit_vector

VARIANTS = ("point", "axial", "cover", "bump")

# Gradient formulas divide by sin(theta); refuse inside this angular margin.
CENTER_MARGIN = 1e-7


@dataclass(frozen=True)
class ObstacleSpec:
    """Parameters of one forbidden-region potential."""

    tau: float
    d_radius: float
    sharpness: int
    centers: np.ndarray
    variant: str = "point"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0.0 < self.d_radius < np.pi):
            raise ValueError("d_radius must lie in (0, pi)")
        if int(self.sharpness) < 1 or self.sharpness != int(self.sharpness):
            raise ValueError("sharpness must be a positive integer")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if centers.shape[0] < 1 or centers.shape[1] != 3:
            raise ValueError("centers must be a nonempty list of 3-vectors")
        centers = np.stack([unit_vector(c) for c in centers])
        if self.variant in ("point", "axial", "bump") and centers.shape[0] != 1:
            raise ValueError(f"variant {self.variant!r} takes exactly one center")
        if self.variant == "axial" and np.linalg.norm(centers[0] - [0.0, 0.0, 1.0]) > 1e-12:
            raise ValueError("axial variant requires center (0, 0, 1)")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "d_radius", float(self.d_radius))
        object.__setattr__(self, "sharpness", int(self.sharpness))
        object.__setattr__(self, "centers", centers)


def _rational_profile(spec: ObstacleSpec, s):
    """tau / (1 + (s/D)^(2N)) evaluated elementwise."""
    w = np.asarray(s, dtype=float) / spec.d_radius
    return spec.tau / (1.0 + w ** (2 * spec.sharpness))


def _rational_profile_derivative(spec: ObstacleSpec, s):
    n2 = 2 * spec.sharpness
    w = np.asarray(s, dtype=float) / spec.d_radius
    wp = w ** (n2 - 1)
    return -spec.tau * (n2 / spec.d_radius) * wp / (1.0 + w * wp) ** 2


def _bump_profile(spec: ObstacleSpec, s):
    s = np.asarray(s, dtype=float)
    x = (s / spec.d_radius) ** (2 * spec.sharpness)
    out = np.zeros_like(x)
    inside = x < 1.0
    out[inside] = np.exp(spec.tau) * np.exp(-1.0 / (1.0 - x[inside]))
    return out


def _bump_profile_derivative(spec: ObstacleSpec, s):
    s = np.asarray(s, dtype=float)
    n2 = 2 * spec.sharpness
    x = (s / spec.d_radius) ** n2
    out = np.zeros_like(x)
    inside = x < 1.0
    xi = x[inside]
    dxds = n2 * s[inside] ** (n2 - 1) / spec.d_radius**n2
    out[inside] = -np.exp(spec.tau) * np.exp(-1.0 / (1.0 - xi)) * dxds / (1.0 - xi) ** 2
    return out


def potential_value_many(spec: ObstacleSpec, ns: np.ndarray) -> np.ndarray:
    """Barrier values at a batch of points (rows of ``ns``)."""
    ns = np.atleast_2d(np.asarray(ns, dtype=float))
    if spec.variant == "axial":
        return _rational_profile(spec, 1.0 - ns[:, 2])
    theta = np.arccos(np.clip(ns @ spec.centers.T, -1.0, 1.0))
    if spec.variant == "bump":
        return _bump_profile(spec, theta[:, 0])
    return _rational_profile(spec, theta).sum(axis=1)


def potential_gradient_many(spec: ObstacleSpec, ns: np.ndarray) -> np.ndarray:
    """Euclidean gradients at a batch of points."""
    ns = np.atleast_2d(np.asarray(ns, dtype=float))
    if spec.variant == "axial":
        dv = _rational_profile_derivative(spec, 1.0 - ns[:, 2])
        out = np.zeros_like(ns)
        out[:, 2] = -dv
        return out
    theta = np.arccos(np.clip(ns @ spec.centers.T, -1.0, 1.0))
    if np.any(theta < CENTER_MARGIN) or np.any(theta > np.pi - CENTER_MARGIN):
        raise GradientSingularity(
            "gradient undefined within 1e-7 rad of a center or its antipode"
        )
    if spec.variant == "bump":
        dprof = _bump_profile_derivative(spec, theta[:, 0])[:, None]
    else:
        dprof = _rational_profile_derivative(spec, theta)
    # dV/dtheta * grad(theta), with grad(theta) = -center / sin(theta)
    return -(dprof / np.sin(theta)) @ spec.centers


def potential_value(spec: ObstacleSpec, n) -> float:
    """Evaluate the barrier at ``n`` (smooth extension, no renormalization)."""
    return float(potential_value_many(spec, np.asarray(n, dtype=float)[None])[0])


def potential_gradient(spec: ObstacleSpec, n) -> tuple[np.ndarray, TangentVector]:
    """Euclidean gradient at ``n`` and its tangential (Riemannian) projection."""
    grad = potential_gradient_many(spec, np.asarray(n, dtype=float)[None])[0]
    base = unit_vector(n)
    return grad, TangentVector(base, project_tangent(base, grad))


def is_inside_forbidden(spec: ObstacleSpec, n, margin: float) -> bool:
    """True iff ``n`` lies strictly inside the margin-cap of some center."""
    if not (0.0 <= margin <= spec.d_radius):
        raise ValueError("margin must lie in [0, d_radius]")
    n = unit_vector(n)
    closest = min(geodesic_distance(n, c) for c in spec.centers)
    return closest < margin
