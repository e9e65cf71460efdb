"""Set descriptions and the SOS program builders.

Each builder turns a target-set description plus a :class:`Domain` and a
degree into a :class:`SosProgram`; :func:`approximate` runs the whole
pipeline (build, lower, solve, reconstruct, certify) and returns an
:class:`ApproxResult`.

Two objective families exist.  The uniform (Hausdorff-metric) programs
minimise a scalar gap between an upper and a lower polynomial envelope of
the set's defining function; they are available for intersections and
unions.  The integral (volume-metric) programs minimise or maximise the
integral of the approximating polynomial over the integration region; they
are available for every supported set, including Minkowski sums, Pontryagin
differences and discrete point clouds.  Minkowski and Pontryagin programs
carry no uniform variant: bounding from the inf/sup side would need
multipliers over an additional lifted variable block, which is out of scope
here, so requesting it raises :class:`UnsupportedFormulation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .moments import Ball, Box, Domain, integral_functional
from .polyalg import Polynomial, embed_tail, monomial_basis, shift_compose
from .sdp import (
    CertificateReport,
    SdpSolution,
    SolveStatus,
    SolverOptions,
    check_certificate,
    solve,
)
from .sosprog import (
    DECISION,
    MULTIPLIER,
    FormulationError,
    IndexMap,
    PolyVar,
    ShapeReport,
    SosConstraint,
    SosProgram,
    Term,
    lower,
    reconstruct,
)


class UnsupportedFormulation(ValueError):
    """Requested (set, metric) pair has no SOS program."""


class ApproximationError(RuntimeError):
    """Solve or certification failed; carries the solver status."""


# ---------------------------------------------------------------------------
# set descriptions


def _common_num_vars(polys: Sequence[Polynomial]) -> int:
    if not polys:
        raise FormulationError("need at least one polynomial")
    n = polys[0].num_vars
    if any(p.num_vars != n for p in polys):
        raise FormulationError("all polynomials must share the variable count")
    return n


@dataclass(frozen=True)
class Intersection:
    """{x : g_i(x) < 0 for all i} (strict) or with <= (non-strict)."""

    polys: tuple
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        _common_num_vars(self.polys)

    @property
    def num_vars(self) -> int:
        return self.polys[0].num_vars


@dataclass(frozen=True)
class Union:
    """Union over i of {x : g_i(x) < 0} (or <= when non-strict)."""

    polys: tuple
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        _common_num_vars(self.polys)

    @property
    def num_vars(self) -> int:
        return self.polys[0].num_vars


@dataclass(frozen=True)
class MinkowskiSum:
    """A + B with A a union of single-polynomial sublevels and B an
    intersection, both non-strict."""

    summand_union: Union
    summand_intersection: Intersection

    def __post_init__(self):
        if self.summand_union.num_vars != self.summand_intersection.num_vars:
            raise FormulationError("Minkowski operands must share the variable count")

    @property
    def num_vars(self) -> int:
        return self.summand_union.num_vars


@dataclass(frozen=True)
class PontryaginDiff:
    """A - B (erosion) with A a strict intersection and B a non-strict one."""

    minuend: Intersection
    subtrahend: Intersection

    def __post_init__(self):
        if self.minuend.num_vars != self.subtrahend.num_vars:
            raise FormulationError("Pontryagin operands must share the variable count")

    @property
    def num_vars(self) -> int:
        return self.minuend.num_vars


@dataclass(frozen=True)
class PointCloud:
    points: tuple

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        if not pts:
            raise FormulationError("point cloud must be nonempty")
        n = len(pts[0])
        if any(len(p) != n for p in pts):
            raise FormulationError("points must share the dimension")
        object.__setattr__(self, "points", pts)

    @property
    def num_vars(self) -> int:
        return len(self.points[0])


SetSpec = (Intersection, Union, MinkowskiSum, PontryaginDiff, PointCloud)


# ---------------------------------------------------------------------------
# helpers


def ball_polynomial(radius: float, num_vars: int) -> Polynomial:
    """r^2 - |x|^2, the localising polynomial of the constraint ball."""
    terms = {(0,) * num_vars: radius * radius}
    for k in range(num_vars):
        mono = tuple(2 if j == k else 0 for j in range(num_vars))
        terms[mono] = -1.0
    return Polynomial(num_vars, terms)


def multiplier_degree(degree: int, paired_degree: int) -> int:
    """Largest even degree keeping multiplier * paired polynomial within degree."""
    return max(0, 2 * ((degree - paired_degree) // 2))


def _check_builder_inputs(polys: Sequence[Polynomial], degree: int) -> int:
    n = _common_num_vars(polys)
    max_deg = max(p.degree() for p in polys)
    if degree < max_deg:
        raise FormulationError(
            f"approximation degree {degree} is below the data degree {max_deg}"
        )
    if degree < 1:
        raise FormulationError("degree must be at least 1")
    return n


def _integral_objective(prog: SosProgram, var_name: str, num_vars: int, degree: int, dom: Domain):
    basis = monomial_basis(num_vars, degree)
    weights = integral_functional(basis, dom)
    prog.objective = [(var_name, mono, float(w)) for mono, w in zip(basis, weights)]


# ---------------------------------------------------------------------------
# builders


def build_hausdorff_intersection(
    g: Sequence[Polynomial], dom: Domain, degree: int
) -> SosProgram:
    """Uniform-gap program for an intersection: envelopes P <= max_i g_i <= J.

    Constraints, with ball = r^2 - |x|^2 and one SOS multiplier each:

      g_i - P - s_pball_i * ball - sum_{j != i} s_region_i_j * (g_i - g_j)  SOS
      J - g_i - s_jball_i * ball                                           SOS
      gamma - (J - P) - s_gap * ball                                       SOS

    minimising gamma.  The region multipliers keep the lower envelope
    non-conservative: P only has to sit below g_i where g_i is the active
    maximum.
    """
    n = _check_builder_inputs(g, degree)
    ball = ball_polynomial(dom.ball_radius, n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    P = prog.add_var(PolyVar("P", n, degree))
    gamma = prog.add_var(PolyVar("gamma", n, 0))

    for i, gi in enumerate(g, start=1):
        s_ball = prog.add_var(
            PolyVar(f"s_pball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        terms = [
            Term(known=gi),
            Term(coeff=-1.0, var=P),
            Term(coeff=-1.0, known=ball, var=s_ball),
        ]
        for j, gj in enumerate(g, start=1):
            if j == i:
                continue
            diff = gi - gj
            if diff.is_zero():
                continue
            s_region = prog.add_var(
                PolyVar(
                    f"s_region_{i}_{j}",
                    n,
                    multiplier_degree(degree, diff.degree()),
                    MULTIPLIER,
                )
            )
            terms.append(Term(coeff=-1.0, known=diff, var=s_region))
        prog.add_constraint(SosConstraint(f"p_below_g_{i}", n, tuple(terms)))

    for i, gi in enumerate(g, start=1):
        s_ball = prog.add_var(
            PolyVar(f"s_jball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        prog.add_constraint(
            SosConstraint(
                f"j_above_g_{i}",
                n,
                (
                    Term(var=J),
                    Term(coeff=-1.0, known=gi),
                    Term(coeff=-1.0, known=ball, var=s_ball),
                ),
            )
        )

    s_gap = prog.add_var(
        PolyVar("s_gap", n, multiplier_degree(degree, 2), MULTIPLIER)
    )
    prog.add_constraint(
        SosConstraint(
            "gap",
            n,
            (
                Term(var=gamma),
                Term(coeff=-1.0, var=J),
                Term(var=P),
                Term(coeff=-1.0, known=ball, var=s_gap),
            ),
        )
    )
    prog.objective = [("gamma", (0,) * n, 1.0)]
    prog.sense = "min"
    return prog


def build_volume_intersection(
    g: Sequence[Polynomial], dom: Domain, degree: int
) -> SosProgram:
    """Integral program for an intersection: minimise the integral of J with
    J - g_i - s_i * ball SOS, so J dominates max_i g_i on the ball."""
    n = _check_builder_inputs(g, degree)
    ball = ball_polynomial(dom.ball_radius, n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    for i, gi in enumerate(g, start=1):
        s = prog.add_var(
            PolyVar(f"s_ball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        prog.add_constraint(
            SosConstraint(
                f"j_above_g_{i}",
                n,
                (
                    Term(var=J),
                    Term(coeff=-1.0, known=gi),
                    Term(coeff=-1.0, known=ball, var=s),
                ),
            )
        )
    _integral_objective(prog, "J", n, degree, dom)
    prog.sense = "min"
    return prog


def build_hausdorff_union(
    g: Sequence[Polynomial], dom: Domain, degree: int
) -> SosProgram:
    """Uniform-gap program for a union: envelopes P <= min_i g_i <= J.

      J - g_i - s_jball_i * ball - sum_{j != i} s_region_i_j * (g_j - g_i)  SOS
      g_i - P - s_pball_i * ball                                           SOS
      gamma - (J - P) - s_gap * ball                                       SOS

    minimising gamma.  Here the upper envelope takes the region multipliers:
    J only has to dominate g_i where g_i is the active minimum.
    """
    n = _check_builder_inputs(g, degree)
    ball = ball_polynomial(dom.ball_radius, n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    P = prog.add_var(PolyVar("P", n, degree))
    gamma = prog.add_var(PolyVar("gamma", n, 0))

    for i, gi in enumerate(g, start=1):
        s_ball = prog.add_var(
            PolyVar(f"s_jball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        terms = [
            Term(var=J),
            Term(coeff=-1.0, known=gi),
            Term(coeff=-1.0, known=ball, var=s_ball),
        ]
        for j, gj in enumerate(g, start=1):
            if j == i:
                continue
            diff = gj - gi
            if diff.is_zero():
                continue
            s_region = prog.add_var(
                PolyVar(
                    f"s_region_{i}_{j}",
                    n,
                    multiplier_degree(degree, diff.degree()),
                    MULTIPLIER,
                )
            )
            terms.append(Term(coeff=-1.0, known=diff, var=s_region))
        prog.add_constraint(SosConstraint(f"j_above_g_{i}", n, tuple(terms)))

    for i, gi in enumerate(g, start=1):
        s_ball = prog.add_var(
            PolyVar(f"s_pball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        prog.add_constraint(
            SosConstraint(
                f"p_below_g_{i}",
                n,
                (
                    Term(known=gi),
                    Term(coeff=-1.0, var=P),
                    Term(coeff=-1.0, known=ball, var=s_ball),
                ),
            )
        )

    s_gap = prog.add_var(
        PolyVar("s_gap", n, multiplier_degree(degree, 2), MULTIPLIER)
    )
    prog.add_constraint(
        SosConstraint(
            "gap",
            n,
            (
                Term(var=gamma),
                Term(coeff=-1.0, var=J),
                Term(var=P),
                Term(coeff=-1.0, known=ball, var=s_gap),
            ),
        )
    )
    prog.objective = [("gamma", (0,) * n, 1.0)]
    prog.sense = "min"
    return prog


def build_volume_union_outer(
    g: Sequence[Polynomial], dom: Domain, degree: int
) -> SosProgram:
    """Integral program for a union, from below: maximise the integral of J
    with g_i - J - s_i * ball SOS, so J sits under min_i g_i on the ball and
    {J <= 0} contains the (non-strict) union."""
    n = _check_builder_inputs(g, degree)
    ball = ball_polynomial(dom.ball_radius, n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    for i, gi in enumerate(g, start=1):
        s = prog.add_var(
            PolyVar(f"s_ball_{i}", n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        prog.add_constraint(
            SosConstraint(
                f"g_above_j_{i}",
                n,
                (
                    Term(known=gi),
                    Term(coeff=-1.0, var=J),
                    Term(coeff=-1.0, known=ball, var=s),
                ),
            )
        )
    _integral_objective(prog, "J", n, degree, dom)
    prog.sense = "max"
    return prog


def _lifted_set_program(
    a_polys: Sequence[Polynomial],
    b_polys: Sequence[Polynomial],
    dom: Domain,
    degree: int,
    shift_sign: str,
    j_side: str,
) -> SosProgram:
    """Shared core of the Minkowski and Pontryagin integral programs.

    Works in 2n variables (x, w).  For each member polynomial a_i of A, the
    constraint couples J(x) against a_i(x -/+ w), localised to the lifted
    ball r^2 - |(x, w)|^2 >= 0 and to the w-feasible set b_j(w) <= 0 (note
    the plus sign on the b multipliers: they relax the expression where
    b_j(w) <= 0 holds).  The caller picks which side J enters on.
    """
    n = _check_builder_inputs(list(a_polys) + list(b_polys), degree)
    two_n = 2 * n
    ball2 = ball_polynomial(dom.ball_radius, two_n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    for i, ai in enumerate(a_polys, start=1):
        shifted = shift_compose(ai, shift_sign)
        if j_side == "below":
            terms = [Term(known=shifted), Term(coeff=-1.0, var=J)]
        else:
            terms = [Term(var=J), Term(coeff=-1.0, known=shifted)]
        s_ball = prog.add_var(
            PolyVar(f"s_ball_{i}", two_n, multiplier_degree(degree, 2), MULTIPLIER)
        )
        terms.append(Term(coeff=-1.0, known=ball2, var=s_ball))
        for j, bj in enumerate(b_polys, start=1):
            s_bset = prog.add_var(
                PolyVar(
                    f"s_bset_{i}_{j}",
                    two_n,
                    multiplier_degree(degree, bj.degree()),
                    MULTIPLIER,
                )
            )
            terms.append(
                Term(coeff=1.0, known=embed_tail(bj, two_n), var=s_bset)
            )
        name = f"j_below_shift_{i}" if j_side == "below" else f"j_above_shift_{i}"
        prog.add_constraint(SosConstraint(name, two_n, tuple(terms)))
    _integral_objective(prog, "J", n, degree, dom)
    prog.sense = "max" if j_side == "below" else "min"
    return prog


def build_volume_minkowski(
    a_polys: Sequence[Polynomial],
    b_polys: Sequence[Polynomial],
    dom: Domain,
    degree: int,
) -> SosProgram:
    """Outer integral program for (union of {a_i <= 0}) + {b_j <= 0 for all j}.

    The constraint ball must cover the lifted pairs: choose the domain's
    radius with r^2 >= max |x|^2 over the integration region plus
    max |w|^2 over {b_j <= 0}.
    """
    return _lifted_set_program(a_polys, b_polys, dom, degree, "minus", "below")


def build_volume_pontryagin(
    a_polys: Sequence[Polynomial],
    b_polys: Sequence[Polynomial],
    dom: Domain,
    degree: int,
) -> SosProgram:
    """Inner integral program for {a_i < 0 for all i} - {b_j <= 0 for all j}."""
    return _lifted_set_program(a_polys, b_polys, dom, degree, "plus", "above")


#: Default strictness margin for pointwise constraints J(x_i) <= -margin.
POINT_MARGIN = 1e-6
#: Extra headroom added to the margin so equality residuals of the solver
#: cannot push a training point back across the threshold.
POINT_MARGIN_PAD = 1e-6


def build_points(
    points: Sequence[Sequence[float]],
    dom: Domain,
    degree: int,
    margin: float = POINT_MARGIN,
) -> SosProgram:
    """Outer integral program for a finite point set.

    maximise the integral of J subject to J(x_i) <= -margin for every point
    and 1 - J - s * ball SOS (so J <= 1 on the ball).  Points must lie in
    the integration region.
    """
    cloud = PointCloud(tuple(points))
    n = cloud.num_vars
    if n != dom.num_vars:
        raise FormulationError("points and domain dimension mismatch")
    for p in cloud.points:
        if not region_contains(dom.region, p):
            raise FormulationError(f"point {p} lies outside the integration region")
    if degree < 1:
        raise FormulationError("degree must be at least 1")
    ball = ball_polynomial(dom.ball_radius, n)
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", n, degree))
    s = prog.add_var(PolyVar("s_ball", n, multiplier_degree(degree, 2), MULTIPLIER))
    prog.add_constraint(
        SosConstraint(
            "j_below_one",
            n,
            (
                Term(known=Polynomial.constant(1.0, n)),
                Term(coeff=-1.0, var=J),
                Term(coeff=-1.0, known=ball, var=s),
            ),
        )
    )
    for p in cloud.points:
        prog.add_point_bound(J, p, -(margin + POINT_MARGIN_PAD))
    _integral_objective(prog, "J", n, degree, dom)
    prog.sense = "max"
    return prog


def region_contains(region, point) -> bool:
    if isinstance(region, Box):
        return all(a <= v <= b for v, a, b in zip(point, region.lo, region.hi))
    if isinstance(region, Ball):
        return math.sqrt(sum(v * v for v in point)) <= region.radius
    raise TypeError(f"unknown region {region!r}")


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class ApproxResult:
    spec: object
    domain: Domain
    degree: int
    metric: str            # "hausdorff" | "volume"
    side: str              # "inner" | "outer"
    strict_sublevel: bool  # whether the guaranteed sublevel set is {J < 0}
    J: Polynomial
    P: Polynomial | None
    gamma: float | None
    objective_value: float
    certificate: CertificateReport
    shape: ShapeReport
    multipliers: dict
    residuals: dict
    iterations: int

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _dispatch(spec, dom: Domain, degree: int, metric: str):
    """Pick the builder and the guarantees for a (set, metric) pair."""
    if metric not in ("hausdorff", "volume"):
        raise UnsupportedFormulation(f"unknown metric {metric!r}")
    if isinstance(spec, Intersection):
        if metric == "hausdorff":
            return build_hausdorff_intersection(spec.polys, dom, degree), "inner", True
        return build_volume_intersection(spec.polys, dom, degree), "inner", True
    if isinstance(spec, Union):
        if metric == "hausdorff":
            return build_hausdorff_union(spec.polys, dom, degree), "inner", True
        return build_volume_union_outer(spec.polys, dom, degree), "outer", False
    if isinstance(spec, MinkowskiSum):
        if metric == "hausdorff":
            raise UnsupportedFormulation(
                "no uniform-metric program for Minkowski sums: upper-bounding the "
                "inf-over-shifts function would need multipliers over an extra "
                "lifted variable block; use metric='volume'"
            )
        return (
            build_volume_minkowski(
                spec.summand_union.polys, spec.summand_intersection.polys, dom, degree
            ),
            "outer",
            False,
        )
    if isinstance(spec, PontryaginDiff):
        if metric == "hausdorff":
            raise UnsupportedFormulation(
                "no uniform-metric program for Pontryagin differences: bounding the "
                "sup-over-shifts function uniformly would need multipliers over an "
                "extra lifted variable block; use metric='volume'"
            )
        return (
            build_volume_pontryagin(
                spec.minuend.polys, spec.subtrahend.polys, dom, degree
            ),
            "inner",
            True,
        )
    if isinstance(spec, PointCloud):
        if metric == "hausdorff":
            raise UnsupportedFormulation(
                "no uniform-metric program for discrete points: the indicator-style "
                "target function is discontinuous and admits no uniform polynomial "
                "approximation; use metric='volume'"
            )
        return build_points(spec.points, dom, degree), "outer", False
    raise UnsupportedFormulation(f"unknown set description {type(spec).__name__}")


#: Pipeline solves run at this tolerance.  The Gram lowerings have optimal
#: faces with rank-deficient blocks, where the Schur complement degenerates
#: before the relative gap can be pushed all the way to the raw-solver
#: default of 1e-8; 1e-7 is reached reliably and keeps the certificate
#: thresholds (1e-7 on eigenvalues and coefficient residuals) comfortably.
PIPELINE_TOL = 1e-7


def approximate(
    spec,
    dom: Domain,
    degree: int,
    metric: str = "volume",
    solver_options: SolverOptions | None = None,
) -> ApproxResult:
    """Build, lower, solve, reconstruct and certify one approximation.

    Raises :class:`UnsupportedFormulation` for (set, metric) pairs without a
    program, and :class:`ApproximationError` when the solver does not reach
    optimality or the independent certificate check fails.
    """
    opts = solver_options or SolverOptions(tol=PIPELINE_TOL)
    program, side, strict = _dispatch(spec, dom, degree, metric)
    problem, index_map = lower(program)
    solution = solve(problem, opts)
    if not solution.is_optimal():
        raise ApproximationError(
            f"solver finished with status {solution.status.value} "
            f"(primal residual {solution.primal_residual:.2e}, "
            f"dual residual {solution.dual_residual:.2e}, gap {solution.gap:.2e})"
        )
    recon = reconstruct(solution, index_map)
    certificate = check_certificate(problem, solution, tol=opts.tol)
    if not certificate.passed:
        raise ApproximationError(
            "certificate check failed: " + "; ".join(certificate.reasons)
        )

    polys = recon.polynomials
    gamma = None
    if "gamma" in polys:
        gamma = polys["gamma"].coefficient((0,) * polys["gamma"].num_vars)
    multipliers = {
        name: poly
        for name, poly in polys.items()
        if name not in ("J", "P", "gamma")
    }
    return ApproxResult(
        spec=spec,
        domain=dom,
        degree=degree,
        metric=metric,
        side=side,
        strict_sublevel=strict,
        J=polys["J"],
        P=polys.get("P"),
        gamma=gamma,
        objective_value=recon.objective_value,
        certificate=certificate,
        shape=index_map.shape,
        multipliers=multipliers,
        residuals=recon.constraint_residuals,
        iterations=solution.iterations,
    )
