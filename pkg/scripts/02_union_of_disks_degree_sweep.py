# Union of three very different disks, swept over the polynomial degree.
#
# One big disk at the origin, a medium one overlapping it, and a tiny one off
# on its own.  The inner (uniform-metric) approximations never spill outside
# the union; the outer (volume-metric) ones always cover it; both tighten as
# the degree grows.  The volume distances are measured on a grid together
# with their resolution bound.

import numpy as np

from sublevelset import Union, approximate
from sublevelset.demos import union_of_disks_scene
from sublevelset.metrics import empirical_volume
from sublevelset.sdp import SolverOptions

polys, dom = union_of_disks_scene()
print("members:")
for g in polys:
    print("  ", g)
print()

pts = np.stack(
    np.meshgrid(
        np.linspace(-0.4, 0.4, 161), np.linspace(-0.4, 0.4, 161), indexing="ij"
    ),
    axis=-1,
).reshape(-1, 2)
member_vals = np.min(np.stack([g.eval_many(pts) for g in polys]), axis=0)

print(f"{'degree':>6} {'gamma*':>12} {'spill-out':>10} {'D_V (outer)':>14}")
for d in (2, 4, 6):
    inner = approximate(
        Union(polys, strict=True), dom, d, "hausdorff", SolverOptions(tol=5e-7)
    )
    outer = approximate(Union(polys, strict=False), dom, d, "volume")
    J_in = inner.J.eval_many(pts)
    spill = int(np.sum((J_in < 0) & (member_vals >= 1e-6)))
    dv = empirical_volume(
        Union(polys, strict=False), (outer.J, False), dom.region, resolution=0.005
    )
    print(f"{d:>6} {inner.gamma:>12.5f} {spill:>10} "
          f"{dv.value:>9.5f} +/- {dv.bound:.5f}")

print("\nthe gap gamma* and the outer volume error both shrink with degree;")
print("spill-out stays at zero because the inner side is certified.")
