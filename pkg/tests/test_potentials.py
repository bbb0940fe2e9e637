import numpy as np
import pytest
from numpy.testing import assert_allclose

from qgc.errors import GradientSingularity
from qgc.potentials import (
    ObstacleSpec,
    is_inside_forbidden,
    potential_gradient,
    potential_gradient_many,
    potential_value,
    potential_value_many,
)
from qgc.sphere import geodesic_distance, project_tangent, unit_vector

EZ = np.array([0.0, 0.0, 1.0])

POINT = ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=6, centers=[EZ], variant="point")
AXIAL = ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=6, centers=[EZ], variant="axial")
COVER = ObstacleSpec(
    tau=30.0,
    d_radius=0.35,
    sharpness=6,
    centers=[EZ, [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
    variant="cover",
)
BUMP = ObstacleSpec(tau=1.0, d_radius=0.8, sharpness=2, centers=[EZ], variant="bump")


def point_at_angle(theta, phi=0.3):
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


def fd_gradient(spec, n, step=1e-5):
    # fourth-order central stencil: the second-order one has truncation
    # error above 1e-6 relative inside the stiff tau=30, N=6 boundary layer
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        g[i] = (
            8.0 * (potential_value(spec, n + e) - potential_value(spec, n - e))
            - (potential_value(spec, n + 2 * e) - potential_value(spec, n - 2 * e))
        ) / (12.0 * step)
    return g


def test_spec_validation():
    with pytest.raises(ValueError):
        ObstacleSpec(tau=-1.0, d_radius=0.35, sharpness=6, centers=[EZ])
    with pytest.raises(ValueError):
        ObstacleSpec(tau=1.0, d_radius=4.0, sharpness=6, centers=[EZ])
    with pytest.raises(ValueError):
        ObstacleSpec(tau=1.0, d_radius=0.35, sharpness=0, centers=[EZ])
    with pytest.raises(ValueError):
        ObstacleSpec(tau=1.0, d_radius=0.35, sharpness=6, centers=[EZ, EZ], variant="point")
    with pytest.raises(ValueError):
        ObstacleSpec(tau=1.0, d_radius=0.35, sharpness=6, centers=[[1.0, 0, 0]], variant="axial")


def test_point_profile_values():
    # maximum at the center, half value on the cap boundary
    assert_allclose(potential_value(POINT, EZ), 30.0)
    n = point_at_angle(POINT.d_radius)
    assert_allclose(potential_value(POINT, n), 15.0, rtol=1e-12)
    spec = ObstacleSpec(tau=1.0, d_radius=0.393, sharpness=2, centers=[EZ], variant="point")
    n = point_at_angle(2 * 0.393)
    assert_allclose(potential_value(spec, n), 1.0 / 17.0, rtol=1e-12)


def test_point_dvdtheta_at_boundary():
    # slope of the radial profile at theta = D is -tau*N/(2D)
    spec = ObstacleSpec(tau=2.5, d_radius=0.5, sharpness=3, centers=[EZ], variant="point")
    eps = 1e-7
    va = potential_value(spec, point_at_angle(spec.d_radius + eps))
    vb = potential_value(spec, point_at_angle(spec.d_radius - eps))
    slope = (va - vb) / (2 * eps)
    assert_allclose(slope, -spec.tau * spec.sharpness / (2 * spec.d_radius), rtol=1e-6)


def test_axial_profile_uses_height_not_angle():
    n = point_at_angle(1.2)
    w = (1.0 - n[2]) / AXIAL.d_radius
    assert_allclose(potential_value(AXIAL, n), 30.0 / (1 + w**12), rtol=1e-12)


def test_gradient_direction_example():
    # gradient of the angle to the north pole at the equator points along -e_z
    g, tv = potential_gradient(POINT, np.array([1.0, 0.0, 0.0]))
    assert g[2] > 0.0  # dV/dtheta < 0 and grad(theta) = -e_z here
    assert_allclose(g[:2], 0.0, atol=1e-15)
    assert abs(tv.base @ tv.vec) < 1e-12


def test_gradient_matches_finite_differences_stiff_parameters():
    # With tau=30, N=6 the barrier is flat to machine precision away from
    # its boundary layer, so an FD oracle only resolves the gradient where
    # the profile argument is moderate; sample that band.
    rng = np.random.default_rng(42)
    for spec in (POINT, AXIAL, COVER, BUMP):
        checked = 0
        while checked < 200:
            n = unit_vector(rng.normal(size=3))
            if spec.variant == "axial":
                if not 0.45 <= (1.0 - n[2]) / spec.d_radius <= 2.1:
                    continue
            else:
                ratios = [geodesic_distance(n, c) / spec.d_radius for c in spec.centers]
                if spec.variant == "bump":
                    if not 0.05 <= min(ratios) <= 0.95:
                        continue
                elif not 0.6 <= min(ratios) <= 2.1:
                    continue
            analytic = potential_gradient_many(spec, n[None])[0]
            numeric = fd_gradient(spec, n)
            scale = max(np.linalg.norm(analytic), 1e-12)
            assert np.linalg.norm(analytic - numeric) / scale < 1e-6
            checked += 1


def test_riemannian_gradient_is_projection():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = unit_vector(rng.normal(size=3))
        if geodesic_distance(n, EZ) < 0.1 or geodesic_distance(n, EZ) > np.pi - 0.1:
            continue
        g, tv = potential_gradient(POINT, n)
        assert_allclose(tv.vec, project_tangent(n, g), atol=1e-14)


def test_gradient_singularity_near_center_and_antipode():
    with pytest.raises(GradientSingularity):
        potential_gradient(POINT, EZ)
    with pytest.raises(GradientSingularity):
        potential_gradient(POINT, -EZ)


def test_rotation_equivariance_point_variant():
    rng = np.random.default_rng(9)
    from qgc.su2 import rotation_matrix, su2_exp

    for _ in range(10):
        Q = rotation_matrix(su2_exp(rng.normal(size=3)))
        n = unit_vector(rng.normal(size=3))
        rotated = ObstacleSpec(
            tau=POINT.tau,
            d_radius=POINT.d_radius,
            sharpness=POINT.sharpness,
            centers=[Q @ EZ],
            variant="point",
        )
        assert_allclose(
            potential_value(rotated, Q @ n), potential_value(POINT, n), rtol=1e-13
        )


def test_axial_invariance_under_z_rotations():
    rng = np.random.default_rng(13)
    n = unit_vector(rng.normal(size=3))
    for ang in rng.uniform(0, 2 * np.pi, size=8):
        R = np.array(
            [[np.cos(ang), -np.sin(ang), 0.0], [np.sin(ang), np.cos(ang), 0.0], [0, 0, 1.0]]
        )
        assert_allclose(potential_value(AXIAL, R @ n), potential_value(AXIAL, n), rtol=1e-13)


def test_point_barrier_monotone_in_angle():
    thetas = np.linspace(0.01, np.pi - 0.01, 200)
    vals = [potential_value(POINT, point_at_angle(t)) for t in thetas]
    assert np.all(np.diff(vals) < 0)


def test_sharpness_limit_separates_inside_outside():
    inside = point_at_angle(0.25)
    outside = point_at_angle(0.5)
    specs = [
        ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=big_n, centers=[EZ])
        for big_n in (10, 20, 40)
    ]
    v_in = [potential_value(s, inside) for s in specs]
    v_out = [potential_value(s, outside) for s in specs]
    assert np.all(np.diff(v_in) > 0) and v_in[-1] > 30.0 * (1 - 1e-9)
    assert np.all(np.diff(v_out) < 0) and v_out[-1] < 30.0 * 1e-9


def test_bump_vanishes_outside_support():
    assert potential_value(BUMP, point_at_angle(BUMP.d_radius + 0.01)) == 0.0
    assert potential_value(BUMP, point_at_angle(BUMP.d_radius - 0.01)) > 0.0
    g = potential_gradient_many(BUMP, point_at_angle(BUMP.d_radius + 0.1)[None])[0]
    assert_allclose(g, np.zeros(3))


def test_cover_sums_point_terms():
    n = unit_vector([0.3, 0.4, 0.2])
    total = sum(
        potential_value(
            ObstacleSpec(tau=30.0, d_radius=0.35, sharpness=6, centers=[c], variant="point"),
            n,
        )
        for c in COVER.centers
    )
    assert_allclose(potential_value(COVER, n), total, rtol=1e-14)


def test_is_inside_forbidden():
    assert is_inside_forbidden(POINT, EZ, 0.2)
    # a point exactly on the margin circle is outside the open ball; the
    # equator gives an exactly representable distance pi/2
    wide = ObstacleSpec(tau=1.0, d_radius=2.0, sharpness=2, centers=[EZ])
    equator = np.array([1.0, 0.0, 0.0])
    assert not is_inside_forbidden(wide, equator, np.arccos(0.0))
    assert is_inside_forbidden(POINT, point_at_angle(0.175), 0.35)
    with pytest.raises(ValueError):
        is_inside_forbidden(POINT, EZ, 0.4)


def test_batched_values_match_scalar():
    rng = np.random.default_rng(77)
    ns = np.stack([unit_vector(rng.normal(size=3)) for _ in range(40)])
    vals = potential_value_many(POINT, ns)
    for n, v in zip(ns, vals):
        assert_allclose(potential_value(POINT, n), v, rtol=1e-14)
