"""Tour of the geometric layer: distances, maps, and barrier landscapes.

Run:  python demos/01_sphere_and_potentials.py [--plot]

Walks the round-sphere primitives the rest of the library is built on,
then samples the four barrier variants along a meridian so their shapes
can be compared side by side.
"""

import sys

import numpy as np

from qgc import (
    ObstacleSpec,
    bloch_vector,
    exp_map,
    geodesic_distance,
    log_map,
    potential_value_many,
    slerp,
)

north = bloch_vector(0.0, 0.0, 1.0)
cairo = bloch_vector(0.5, 0.5, 0.7)  # an arbitrary state
print("A point and its antipode are half a great circle apart:")
print(f"  d(north, -north) = {geodesic_distance(north, -north):.6f}  (pi = {np.pi:.6f})")

print("\nThe log map measures, the exp map replays:")
tv = log_map(north, cairo)
print(f"  |log| = {tv.norm:.6f} equals d = {geodesic_distance(north, cairo):.6f}")
print(f"  exp recovers the target to {np.linalg.norm(exp_map(north, tv) - cairo):.2e}")

print("\nInterpolation stays on the sphere with constant speed:")
pts = [slerp(north, cairo, t) for t in np.linspace(0, 1, 5)]
gaps = [geodesic_distance(a, b) for a, b in zip(pts, pts[1:])]
print("  gap sizes:", ", ".join(f"{g:.6f}" for g in gaps))

# ---------------------------------------------------------------------------
# Barrier landscapes along the meridian through the north-pole obstacle.
# The axial variant uses the chordal height (1 - n_z) rather than the
# angle, which widens its footprint noticeably at the same d_radius.
# ---------------------------------------------------------------------------
variants = {
    "point": ObstacleSpec(tau=1.0, d_radius=0.393, sharpness=2, centers=[north]),
    "sharp point": ObstacleSpec(tau=1.0, d_radius=0.393, sharpness=6, centers=[north]),
    "axial": ObstacleSpec(tau=1.0, d_radius=0.393, sharpness=2, centers=[north], variant="axial"),
    "bump": ObstacleSpec(tau=1.0, d_radius=0.786, sharpness=2, centers=[north], variant="bump"),
}
thetas = np.linspace(0.0, np.pi, 181)
meridian = np.stack([np.sin(thetas), np.zeros_like(thetas), np.cos(thetas)], axis=1)
profiles = {name: potential_value_many(spec, meridian) for name, spec in variants.items()}

print("\nBarrier values along the meridian (theta, then one column per variant):")
header = "theta    " + "  ".join(f"{name:>12s}" for name in profiles)
print("  " + header)
for i in range(0, len(thetas), 30):
    row = "  ".join(f"{profiles[name][i]:12.6f}" for name in profiles)
    print(f"  {thetas[i]:.4f}  {row}")

print("\nNote the half-level at the cap boundary and how sharpness steepens the wall.")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, vals in profiles.items():
        ax.plot(thetas, vals, label=name)
    ax.axvline(0.393, color="k", lw=0.5, ls="--")
    ax.set_xlabel("angle from obstacle center (rad)")
    ax.set_ylabel("barrier value")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demo01_potentials.png", dpi=130)
    print("saved demo01_potentials.png")
