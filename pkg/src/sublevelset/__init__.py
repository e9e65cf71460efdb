"""Polynomial sublevel-set approximation of sets via sum-of-squares programs.

The package is organised bottom-up:

- :mod:`sublevelset.polyalg` — sparse multivariate polynomials.
- :mod:`sublevelset.moments` — closed-form integrals over boxes and balls.
- :mod:`sublevelset.sosprog` — SOS program IR and the Gram-matrix lowering.
- :mod:`sublevelset.sdp` — dense primal-dual interior-point SDP solver and
  an independent certificate checker.
- :mod:`sublevelset.setapprox` — set descriptions and the seven program
  builders, plus the end-to-end :func:`~sublevelset.setapprox.approximate`.
- :mod:`sublevelset.metrics` — membership oracles and empirical
  Hausdorff/volume distances.
- :mod:`sublevelset.specio` — problem files, result files, grid CSV export.
- :mod:`sublevelset.demos` — Lorenz point-cloud and Dubins planning demos.
- :mod:`sublevelset.cli` — command-line entry point.
"""

from .moments import Ball, Box, Domain
from .polyalg import Polynomial, monomial_basis, shift_compose
from .setapprox import (
    ApproxResult,
    Intersection,
    MinkowskiSum,
    PointCloud,
    PontryaginDiff,
    Union,
    approximate,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxResult",
    "Ball",
    "Box",
    "Domain",
    "Intersection",
    "MinkowskiSum",
    "PointCloud",
    "PontryaginDiff",
    "Polynomial",
    "Union",
    "approximate",
    "monomial_basis",
    "shift_compose",
    "__version__",
]
