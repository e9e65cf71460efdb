# A first tour: approximate one disk-shaped set two ways.
#
# The target is {x : x1^2 + x2^2 - 0.25^2 < 0}.  Because the target is itself
# a polynomial sublevel set, both programs should hand back (essentially) the
# defining polynomial: the volume program because any dominating polynomial
# integrates to more, the uniform program because the envelope gap can be
# driven to zero.

import numpy as np

from sublevelset import Box, Domain, Intersection, Polynomial, approximate

g = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -0.0625})
dom = Domain(1.0, Box((-0.7, -0.7), (0.7, 0.7)))

print("target: x1^2 + x2^2 - 0.0625, ball radius 1, box [-0.7, 0.7]^2\n")

vol = approximate(Intersection((g,)), dom, degree=2, metric="volume")
print("volume program (min integral of J, J >= g on the ball):")
print(f"  objective  {vol.objective_value:+.6f}")
print(f"  J - g coefficient gap: "
      f"{max(abs(vol.J.coefficient(m) - g.coefficient(m)) for m in g.monomials()):.2e}")
print(f"  certificate: min eig {vol.certificate.min_eigenvalue:+.1e}, "
      f"residual {vol.max_residual():.1e}\n")

haus = approximate(Intersection((g,)), dom, degree=2, metric="hausdorff")
print("uniform program (sandwich P <= g <= J, min gap):")
print(f"  gamma* = {haus.gamma:.2e}")
pts = np.random.default_rng(0).uniform(-0.7, 0.7, size=(500, 2))
print(f"  max |J - g| on samples: {np.abs(haus.J.eval_many(pts) - g.eval_many(pts)).max():.2e}")
print(f"  max |P - g| on samples: {np.abs(haus.P.eval_many(pts) - g.eval_many(pts)).max():.2e}")

print("\nshape of the lowered problem:")
print(haus.shape.text())
